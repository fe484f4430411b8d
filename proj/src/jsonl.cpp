#include "refactor/jsonl.hpp"

#include "refactor/errors.hpp"

#include <cstdio>
#include <fstream>

namespace refactor::jsonl {

std::vector<nlohmann::json> read_file(const std::filesystem::path& path,
                                      std::vector<BadLine>* bad) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    std::vector<nlohmann::json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            if (bad) bad->push_back({lineno, "unparsable JSON"});
            continue;
        }
        out.push_back(std::move(j));
    }
    return out;
}

Writer::Writer(const std::filesystem::path& path) {
    std::filesystem::create_directories(path.parent_path());
    file_ = std::fopen(path.string().c_str(), "ab");
    if (!file_) throw Error("cannot open " + path.string() + " for append");
}

Writer::~Writer() {
    if (file_) std::fclose(file_);
}

void Writer::write(const nlohmann::json& record) {
    const std::string line = record.dump();
    std::fwrite(line.data(), 1, line.size(), file_);
    std::fputc('\n', file_);
    std::fflush(file_);
}

std::string dump_canonical(const nlohmann::json& value) {
    // nlohmann::json already stores object keys sorted; dump() is stable.
    return value.dump();
}

}  // namespace refactor::jsonl
