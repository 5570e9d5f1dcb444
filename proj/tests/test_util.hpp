#pragma once

#include <filesystem>
#include <string>

// Fresh scratch directory under the build tree for one test.
inline std::filesystem::path test_dir(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::current_path() / "test-scratch" / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}
