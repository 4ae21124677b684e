#ifndef LEXFORGE_TESTS_SUPPORT_HPP
#define LEXFORGE_TESTS_SUPPORT_HPP

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

namespace testing_support {

namespace fs = std::filesystem;

inline const fs::path kDataDir = LEXFORGE_DATA_DIR;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static std::atomic<int> counter{0};
    path_ = fs::temp_directory_path() /
            ("lexforge-test-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const fs::path& path() const { return path_; }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

inline void write(const fs::path& p, const std::string& contents) {
  std::ofstream f(p, std::ios::binary);
  f << contents;
}

inline std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// A record line in the case-law JSON layout.
inline std::string case_record(long id, const std::string& opinions_json, const std::string& date = "1997-12-17") {
  return R"({"id": )" + std::to_string(id) + R"(, "decision_date": ")" + date +
         R"(", "jurisdiction": {"name_long": "New Mexico"}, "casebody": {"data": {"opinions": [)" + opinions_json +
         "]}}}";
}

inline std::string opinion_json(const std::string& type, const std::string& text, const std::string& author = "") {
  std::string out = R"({"type": ")" + type + R"(", "text": ")" + text + "\"";
  if (!author.empty()) out += R"(, "author": ")" + author + "\"";
  return out + "}";
}

// Opinion text of `n` distinct well-formed sentences.
inline std::string sentences_text(int n, int salt = 0) {
  std::string out;
  for (int i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += "The court considered argument number " + std::to_string(i + salt) + " and rejected the appeal.";
  }
  return out;
}

}  // namespace testing_support

#endif  // LEXFORGE_TESTS_SUPPORT_HPP
