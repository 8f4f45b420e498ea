#pragma once

#include <atomic>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <utility>

#include "semcodec/semcodec.hpp"

namespace semcodec::support {

namespace fs = std::filesystem;

inline fs::path data_dir() { return fs::path(SEMCODEC_DATA_DIR); }
inline fs::path fixture_image(const std::string &name) { return data_dir() / "fixtures" / "images" / name; }

inline MockBackend make_mock(MockOptions options = {}) {
    return MockBackend(load_mock_fixtures(data_dir() / "fixtures"), load_wordlist(data_dir() / "wordlist.txt"),
                       options);
}

inline ImageRef boat_image() { return ImageRef(read_png(fixture_image("boat.png"))); }

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    TempDir() {
        static std::atomic<int> counter{0};
        std::random_device rd;
        path_ = fs::temp_directory_path() /
                ("semcodec-test-" + std::to_string(rd()) + "-" + std::to_string(counter++));
        fs::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path_, ec);
    }
    TempDir(const TempDir &) = delete;
    TempDir &operator=(const TempDir &) = delete;

    const fs::path &path() const noexcept { return path_; }
    fs::path operator/(const std::string &name) const { return path_ / name; }

private:
    fs::path path_;
};

/// Mock whose text transforms can be overridden per task.
class ScriptedBackend : public MockBackend {
public:
    using Script = std::function<std::optional<std::string>(TransformTask, std::string_view, std::string_view)>;

    explicit ScriptedBackend(Script script, MockOptions options = {})
        : MockBackend(load_mock_fixtures(data_dir() / "fixtures"), load_wordlist(data_dir() / "wordlist.txt"),
                      options),
          script_(std::move(script)) {}

    int transform_calls = 0;

protected:
    std::string do_transform(const BackendSession &session, TransformTask task, std::string_view instruction,
                             std::string_view payload) override {
        ++transform_calls;
        if (auto scripted = script_(task, instruction, payload)) return *scripted;
        return MockBackend::do_transform(session, task, instruction, payload);
    }

private:
    Script script_;
};

/// Canonical text of `n` words, cycling through a fixed vocabulary.
inline std::string words_of(std::size_t n) {
    static const char *vocab[] = {"boat", "water", "sky", "hill", "pier", "mast", "stripe", "buoy"};
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += vocab[i % 8];
    }
    return out;
}

/// Random string over the 16 alphabet characters, never starting/ending in
/// a space and without doubled spaces (i.e. canonical).
inline std::string random_alphabet_text(std::mt19937_64 &rng, std::size_t max_len) {
    std::uniform_int_distribution<std::size_t> len_dist(0, max_len);
    std::uniform_int_distribution<int> sym(0, 15);
    const std::size_t len = len_dist(rng);
    std::string out;
    while (out.size() < len) {
        char c = kAlphabet[static_cast<std::size_t>(sym(rng))];
        if (c == ' ' && (out.empty() || out.back() == ' ')) continue;
        out.push_back(c);
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    return out;
}

}  // namespace semcodec::support
