#ifndef OPENSLOT_TESTS_TEST_UTIL_HPP
#define OPENSLOT_TESTS_TEST_UTIL_HPP

#include <cmath>
#include <filesystem>
#include <string>

#include <unistd.h>

#include "openslot/autodiff.hpp"

namespace openslot::testing {

inline void ZeroParams(ParamStore& params) {
  for (const auto& [name, p] : params.entries()) {
    for (double& v : params.Mutable(name).data()) v = 0.0;
  }
}

inline double MaxAbsDiff(const Array& a, const Array& b) {
  if (a.shape() != b.shape()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("openslot_" + tag + "_" + std::to_string(::getpid()) + "_" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

}  // namespace openslot::testing

#endif  // OPENSLOT_TESTS_TEST_UTIL_HPP
