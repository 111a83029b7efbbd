#include "ragsynth/jsonl.hpp"

#include <fstream>
#include <sstream>

#include "ragsynth/common.hpp"

namespace ragsynth {

namespace fs = std::filesystem;

std::vector<ojson> read_jsonl(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::vector<ojson> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            records.push_back(ojson::parse(line));
        } catch (const nlohmann::json::parse_error& e) {
            throw DataError(path.string() + ":" + std::to_string(line_no) +
                            ": malformed jsonl line: " + e.what());
        }
    }
    return records;
}

void atomic_write_text(const fs::path& path, const std::string& content) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw DataError("cannot write file: " + tmp.string());
        out << content;
    }
    fs::rename(tmp, path);
}

void write_jsonl(const fs::path& path, const std::vector<ojson>& records) {
    std::ostringstream out;
    for (const auto& rec : records) out << rec.dump() << '\n';
    atomic_write_text(path, out.str());
}

std::string read_text_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace ragsynth
