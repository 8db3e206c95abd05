# Copyright 2026 The Screentime Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Writes the 20-movie fixture and its golden report files.

The goldens are computed here from the generated records with plain Python,
without touching the C++ code. Rerun only when the fixture itself changes:

    python3 make_fixture.py
"""

import json
import random
import statistics
from collections import Counter, defaultdict
from pathlib import Path

HERE = Path(__file__).resolve().parent
GOLDEN = HERE / "golden"

GENRES = ["Drama", "Comedy", "Action", "Romance", "Thriller", "Horror"]
PERIODS = [(2000, 2004), (2005, 2009), (2010, 2014), (2015, 2019)]
FACTORS = {
    "2000-2004": (0.86, 0.62),
    "2005-2009": (0.84, 0.66),
    "2010-2014": (0.85, 0.64),
    "2015-2019": (0.88, 0.70),
}
NO_FACE_MOVIE = "tt0100003"


def movies():
    rng = random.Random(20)
    rows = []
    for i in range(20):
        year = 2000 + i
        genres = [GENRES[i % 6]]
        if i % 3 == 0:
            genres.append(GENRES[(i + 2) % 6])
        rows.append({
            "id": f"tt01{i:05d}",
            "title": f"Fixture {i}",
            "year": year,
            "genres": genres,
            "runtime_min": 85 + (i * 7) % 50,
            "budget_usd": 1_000_000 * (5 + i),
            "gross_usd": 1_000_000 * (3 + (i * 13) % 40),
            "rating_value": round(5.0 + rng.random() * 3.5, 1),
            "rating_count": 1000 + 137 * i,
            "female_rating_share": round(0.2 + rng.random() * 0.5, 3),
            "seeders": 5 + i,
            "bechdel_score": None if i % 4 == 1 else (i * 5) % 4,
        })
    return rows


def filtered_out():
    base = dict(runtime_min=95, budget_usd=1000000, gross_usd=2000000, rating_value=6.0,
                rating_count=500, female_rating_share=0.4, bechdel_score=None)
    return [
        dict(base, id="tt0200001", title="Drawn", year=2016, genres=["Animation", "Comedy"], seeders=40),
        dict(base, id="tt0200002", title="Obscure", year=2012, genres=["Drama"], seeders=1),
        dict(base, id="tt0200003", title="Early", year=1979, genres=["Drama"], seeders=30),
    ]


def write_manifest(rows):
    header = ("id,title,year,genres,runtime_min,budget_usd,gross_usd,rating_value,rating_count,"
              "female_rating_share,parental_rating,seeders,frame_width,frame_height,bechdel_score")
    lines = [header]
    for m in rows:
        lines.append(",".join(str(v) for v in [
            m["id"], m["title"], m["year"], "|".join(m["genres"]), m["runtime_min"], m["budget_usd"],
            m["gross_usd"], m["rating_value"], m["rating_count"], m["female_rating_share"], "PG-13",
            m["seeders"], 1920, 1080, "" if m["bechdel_score"] is None else m["bechdel_score"]]))
    (HERE / "manifest.csv").write_text("\n".join(lines) + "\n")


def box(rng):
    # Two-decimal coordinates keep centres away from the 1/3 and 2/3 lines.
    w = rng.randint(4, 30) / 100
    h = rng.randint(4, 30) / 100
    x = rng.randint(0, int(round((1 - w) * 100))) / 100
    y = rng.randint(0, int(round((1 - h) * 100))) / 100
    return x, y, w, h


def detections(rows):
    rng = random.Random(2020)
    records = []
    for i, m in enumerate(rows):
        if m["id"] == NO_FACE_MOVIE:
            continue
        p_female = 0.15 + 0.6 * ((i * 7) % 20) / 20
        frames = 30 + (i * 11) % 25
        for f in range(frames):
            ts = 30000 * (f + 1)
            n = rng.choices([1, 2, 3, 4], weights=[55, 30, 12, 3])[0]
            for _ in range(n):
                g = "female" if rng.random() < p_female else "male"
                x, y, w, h = box(rng)
                records.append({"movie_id": m["id"], "frame_ts_ms": ts, "x": x, "y": y, "w": w, "h": h,
                                "gender": g, "confidence": round(0.5 + rng.random() / 2, 3)})
    # Detections for a filtered-out movie are ignored downstream.
    for f in range(5):
        records.append({"movie_id": "tt0200001", "frame_ts_ms": 30000 * (f + 1), "x": 0.1, "y": 0.1,
                        "w": 0.2, "h": 0.2, "gender": "female"})
    rng.shuffle(records)
    lines = [json.dumps(r, separators=(",", ":")) for r in records]
    # One malformed line, well under the tolerated fraction.
    lines.insert(len(lines) // 2, '{"movie_id":"tt0100001","frame_ts_ms":1,"x":0.9,"y":0.1,"w":0.5,'
                                  '"h":0.1,"gender":"female"}')
    (HERE / "detections.jsonl").write_text("\n".join(lines) + "\n")
    return records


def write_factors():
    doc = {p: {"lambda_male": lm, "lambda_female": lf, "n_tasks": 250, "fallback": False}
           for p, (lm, lf) in FACTORS.items()}
    (HERE / "factors.json").write_text(json.dumps(doc, indent=2) + "\n")


def f6(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, int):
        return str(v)
    return f"{v:.6f}"


def golden_periods(rows, records):
    counts = defaultdict(lambda: [0, 0])
    for r in records:
        counts[r["movie_id"]][0 if r["gender"] == "female" else 1] += 1
    out = ["period,year_lo,year_hi,movies,movies_with_ffr,mean_ffr,sd_ffr,lambda_male,lambda_female,"
           "factors_fallback,bechdel_covered,bechdel_pass_rate"]
    every = []
    for lo, hi in PERIODS:
        label = f"{lo}-{hi}"
        lm, lf = FACTORS[label]
        members = [m for m in rows if lo <= m["year"] <= hi]
        ffr = []
        for m in members:
            nf, nm = counts[m["id"]]
            if nf + nm == 0:
                continue
            raw = nf / (nf + nm)
            ffr.append((1 - lm) + (lm + lf - 1) * raw)
        every += ffr
        scored = [m for m in members if m["bechdel_score"] is not None]
        passed = sum(1 for m in scored if m["bechdel_score"] == 3)
        rate = passed / len(scored) if scored else None
        out.append(",".join([label, str(lo), str(hi), str(len(members)), str(len(ffr)),
                             f6(statistics.fmean(ffr)), f6(statistics.pstdev(ffr)), f6(lm), f6(lf),
                             "false", str(len(scored)), f6(rate)]))
    out.append(",".join(["all", "", "", str(len(rows)), str(len(every)), f6(statistics.fmean(every)),
                         f6(statistics.pstdev(every)), "", "", "", "", ""]))
    (GOLDEN / "ffr_by_period.csv").write_text("\n".join(out) + "\n")


def frames_of_latest(rows, records):
    lo, hi = PERIODS[-1]
    scope = {m["id"] for m in rows if lo <= m["year"] <= hi}
    frames = defaultdict(list)
    for r in records:
        if r["movie_id"] in scope:
            frames[(r["movie_id"], r["frame_ts_ms"])].append(r)
    return f"{lo}-{hi}", frames


def golden_combinations(rows, records):
    _, frames = frames_of_latest(rows, records)
    keys = Counter()
    for faces in frames.values():
        nf = sum(1 for r in faces if r["gender"] == "female")
        keys[(nf, len(faces) - nf)] += 1
    total = sum(keys.values())
    ranked = sorted(sorted(keys.items()), key=lambda kv: -kv[1])
    out = ["key,n_female,n_male,frames,share,cumulative_share"]
    cum = 0
    for (nf, nm), n in ranked:
        if cum >= 0.95 * total:
            break
        cum += n
        out.append(",".join([f"{nf}F{nm}M", str(nf), str(nm), str(n), f6(n / total), f6(cum / total)]))
    (GOLDEN / "combinations.csv").write_text("\n".join(out) + "\n")


def third(v):
    return 0 if v < 1 / 3 else (1 if v < 2 / 3 else 2)


def golden_thirds(rows, records):
    label, frames = frames_of_latest(rows, records)
    grids = {}
    for faces in frames.values():
        nf = sum(1 for r in faces if r["gender"] == "female")
        key = (nf, len(faces) - nf)
        grid = grids.setdefault(key, {"female": [[0] * 3 for _ in range(3)], "male": [[0] * 3 for _ in range(3)]})
        for r in faces:
            grid[r["gender"]][third(r["y"] + r["h"] / 2)][third(r["x"] + r["w"] / 2)] += 1
    matrices = []
    for (nf, nm), grid in sorted(grids.items()):
        entry = {"key": f"{nf}F{nm}M", "n_female": nf, "n_male": nm}
        for g in ("female", "male"):
            faces = sum(map(sum, grid[g]))
            pct = None if faces == 0 else [[round(100 * c / faces, 6) for c in row] for row in grid[g]]
            entry[g] = {"faces": faces, "counts": grid[g], "percentages": pct}
        matrices.append(entry)
    (GOLDEN / "thirds_matrices.json").write_text(json.dumps({"period": label, "matrices": matrices}, indent=2) + "\n")


def main():
    rows = movies()
    write_manifest(rows + filtered_out())
    records = detections(rows)
    write_factors()
    GOLDEN.mkdir(exist_ok=True)
    kept = [r for r in records if r["movie_id"].startswith("tt01")]
    golden_periods(rows, kept)
    golden_combinations(rows, kept)
    golden_thirds(rows, kept)


if __name__ == "__main__":
    main()
