#include "rehab/coach/profile_store.hpp"

#include <fstream>
#include <nlohmann/json.hpp>
#include <system_error>
#include <unistd.h>

#include "rehab/errors.hpp"

namespace rehab::coach {

ProfileStore::ProfileStore(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::filesystem::path ProfileStore::path_for(const std::string& id) const {
  if (id.empty() || id == "." || id == ".." || id.find_first_of("/\\") != std::string::npos ||
      id.find('\0') != std::string::npos) {
    throw ValidationError("subject id '" + id + "' cannot name a profile file");
  }
  return dir_ / (id + ".json");
}

void ProfileStore::save(const rb::UserProfile& profile) const {
  const auto target = path_for(profile.subject_id);
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw IoError("cannot create " + dir_.string() + ": " + ec.message());
  const auto tmp = dir_ / ("." + profile.subject_id + ".json.tmp" + std::to_string(::getpid()));
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out << rb::profile_to_json(profile).dump(2) << '\n';
    out.flush();
    if (!out) throw IoError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw IoError("cannot replace " + target.string() + ": " + ec.message());
  }
}

ProfileLookup ProfileStore::load(const std::string& subject_id) const {
  ProfileLookup r;
  std::filesystem::path path;
  try {
    path = path_for(subject_id);
  } catch (const ValidationError& e) {
    r.status = ProfileStatus::Unreadable;
    r.message = e.what();
    return r;
  }
  std::error_code ec;
  if (!std::filesystem::exists(path, ec)) {
    r.status = ec ? ProfileStatus::Unreadable : ProfileStatus::Missing;
    r.message = ec ? ec.message() : "no profile for " + subject_id;
    return r;
  }
  std::ifstream in(path);
  if (!in) {
    r.status = ProfileStatus::Unreadable;
    r.message = "cannot open " + path.string();
    return r;
  }
  try {
    nlohmann::json j;
    in >> j;
    auto p = rb::profile_from_json(j);
    if (p.subject_id != subject_id) throw ParseError("profile belongs to '" + p.subject_id + "'");
    r.profile = std::move(p);
    r.status = ProfileStatus::Found;
  } catch (const nlohmann::json::exception& e) {
    r.status = ProfileStatus::Corrupt;
    r.message = path.string() + ": " + e.what();
  } catch (const Error& e) {
    r.status = ProfileStatus::Corrupt;
    r.message = path.string() + ": " + e.what();
  }
  return r;
}

rb::UserProfile tune_user(const ProfileStore& store, const std::string& subject_id,
                          std::span<const MotionClip> unaffected, const rb::KPolicy& k) {
  auto profile = rb::tune_thresholds(subject_id, unaffected, k);
  store.save(profile);
  return profile;
}

}  // namespace rehab::coach
