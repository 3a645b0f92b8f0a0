#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>

#include "rehab/motion.hpp"
#include "rehab/rules.hpp"

namespace rehab::coach {

enum class ProfileStatus : std::uint8_t { Found, Missing, Corrupt, Unreadable };

struct ProfileLookup {
  ProfileStatus status = ProfileStatus::Missing;
  std::optional<rb::UserProfile> profile;
  std::string message;
};

/// One JSON file per subject under a directory. Writes go to a temporary
/// file in the same directory and are renamed into place, so readers never
/// see a partial profile.
class ProfileStore {
 public:
  explicit ProfileStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  /// Throws ValidationError for ids that are not plain file names.
  std::filesystem::path path_for(const std::string& subject_id) const;

  void save(const rb::UserProfile& profile) const;
  /// Never throws for file problems; they are reported in the status.
  ProfileLookup load(const std::string& subject_id) const;

 private:
  std::filesystem::path dir_;
};

/// Tunes thresholds from unaffected clips and persists them.
rb::UserProfile tune_user(const ProfileStore& store, const std::string& subject_id,
                          std::span<const MotionClip> unaffected, const rb::KPolicy& k = rb::KPolicy::per_component());

}  // namespace rehab::coach
