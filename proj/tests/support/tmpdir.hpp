#pragma once

#include <cstdlib>
#include <filesystem>
#include <stdexcept>
#include <string>

namespace testing_support {

// Scratch directory removed on destruction.
class TmpDir {
 public:
  TmpDir() {
    std::string tmpl =
        (std::filesystem::temp_directory_path() / "visret_test_XXXXXX")
            .string();
    if (::mkdtemp(tmpl.data()) == nullptr) {
      throw std::runtime_error("mkdtemp failed");
    }
    path_ = tmpl;
  }

  ~TmpDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }

  TmpDir(const TmpDir&) = delete;
  TmpDir& operator=(const TmpDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string str(const std::string& rel) const {
    return (path_ / rel).string();
  }

 private:
  std::filesystem::path path_;
};

}  // namespace testing_support
