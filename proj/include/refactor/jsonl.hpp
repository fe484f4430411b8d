#pragma once

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace refactor::jsonl {

/// One line of a JSONL file that failed to parse.
struct BadLine {
    std::size_t line_number = 0;  // 1-based
    std::string message;
};

/// Parse every line of `path` as a JSON object. Unparsable lines are
/// collected in `bad`, not thrown; a torn final line (killed writer) lands
/// there too, which is what resumable readers want.
std::vector<nlohmann::json> read_file(const std::filesystem::path& path,
                                      std::vector<BadLine>* bad = nullptr);

/// Append-mode writer that flushes after every record so an interrupted
/// process leaves at most one torn line.
class Writer {
public:
    explicit Writer(const std::filesystem::path& path);
    ~Writer();
    Writer(const Writer&) = delete;
    Writer& operator=(const Writer&) = delete;

    void write(const nlohmann::json& record);

private:
    FILE* file_ = nullptr;
};

/// Serialize with a fixed, reproducible layout (sorted keys, no spaces).
std::string dump_canonical(const nlohmann::json& value);

}  // namespace refactor::jsonl
