// Copyright 2026 The Screentime Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <fstream>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "screentime/corpus.hpp"
#include "screentime/error.hpp"

namespace screentime::corpus {

namespace {

std::optional<int> rating_of(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("rating")) return std::nullopt;
  const auto& r = j["rating"];
  int value = -1;
  if (r.is_number_integer()) {
    value = r.get<int>();
  } else if (r.is_string()) {
    try {
      value = std::stoi(r.get<std::string>());
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  if (value < 0 || value > 3) return std::nullopt;
  return value;
}

}  // namespace

std::string normalize_imdb_id(const std::string& id) {
  if (id.size() > 2 && (id.rfind("tt", 0) == 0)) return id.substr(2);
  return id;
}

HttpBechdelClient::HttpBechdelClient(std::string base_url, std::string path)
    : base_url_(std::move(base_url)), path_(std::move(path)) {}

std::optional<BechdelEntry> HttpBechdelClient::lookup(const std::string& imdbid) {
  httplib::Client client(base_url_);
  client.set_connection_timeout(5);
  client.set_read_timeout(10);
  httplib::Params params{{"imdbid", imdbid}};
  auto res = client.Get(path_, params, httplib::Headers{});
  if (!res) {
    throw Error(ErrorCode::ExternalCommandFailed,
                "bechdel request failed: " + httplib::to_string(res.error()));
  }
  if (res->status == 404) return std::nullopt;
  if (res->status != 200) {
    throw Error(ErrorCode::ExternalCommandFailed,
                "bechdel service answered HTTP " + std::to_string(res->status));
  }
  auto body = nlohmann::json::parse(res->body, nullptr, false);
  auto rating = rating_of(body);
  if (!rating) return std::nullopt;
  return BechdelEntry{imdbid, *rating};
}

BechdelCache::BechdelCache(std::filesystem::path file) : file_(std::move(file)) {
  std::ifstream in(file_);
  if (!in) return;
  std::string line;
  while (std::getline(in, line)) {
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.contains("imdbid")) continue;
    auto rating = rating_of(j);
    if (!rating) continue;
    const auto& id = j["imdbid"];
    entries_[id.is_string() ? id.get<std::string>() : id.dump()] = *rating;
  }
}

std::optional<int> BechdelCache::get(const std::string& imdbid) const {
  std::lock_guard lock(*mu_);
  auto it = entries_.find(imdbid);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void BechdelCache::put(const BechdelEntry& entry) {
  std::lock_guard lock(*mu_);
  entries_[entry.imdbid] = entry.rating;
  if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
  std::ofstream out(file_, std::ios::app);
  if (!out) throw Error(ErrorCode::Unreadable, "cannot append to " + file_.string());
  nlohmann::ordered_json j;
  j["imdbid"] = entry.imdbid;
  j["rating"] = entry.rating;
  out << j.dump() << '\n';
}

CorpusManifest enrich_bechdel(const CorpusManifest& manifest, BechdelCache& cache,
                              BechdelClient* client, WarningLog* warnings,
                              EnrichReport* report) {
  EnrichReport local;
  CorpusManifest out = manifest;
  for (auto& movie : out.movies) {
    const auto key = normalize_imdb_id(movie.id);
    if (auto cached = cache.get(key)) {
      movie.bechdel_score = *cached;
      ++local.from_cache;
      continue;
    }
    if (movie.bechdel_score) continue;
    if (client && !local.network_failed) {
      try {
        if (auto entry = client->lookup(key)) {
          cache.put(*entry);
          movie.bechdel_score = entry->rating;
          ++local.fetched;
          continue;
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::ExternalCommandFailed) throw;
        local.network_failed = true;
        if (warnings) {
          warnings->warn("bechdel-network", std::string("continuing with cache only: ") + e.what(),
                         movie.id);
        }
      }
    }
    local.uncovered.push_back(movie.id);
  }
  if (report) *report = std::move(local);
  return out;
}

}  // namespace screentime::corpus
