#include "ragsynth/json_util.hpp"

#include "ragsynth/common.hpp"
#include "ragsynth/text.hpp"

namespace ragsynth {

std::string extract_json_block(const std::string& text) {
    auto start = text.find('{');
    while (start != std::string::npos) {
        int depth = 0;
        bool in_string = false;
        bool escaped = false;
        for (std::size_t i = start; i < text.size(); ++i) {
            char c = text[i];
            if (in_string) {
                if (escaped)
                    escaped = false;
                else if (c == '\\')
                    escaped = true;
                else if (c == '"')
                    in_string = false;
                continue;
            }
            if (c == '"') {
                in_string = true;
            } else if (c == '{') {
                ++depth;
            } else if (c == '}') {
                --depth;
                if (depth == 0) return text.substr(start, i - start + 1);
            }
        }
        start = text.find('{', start + 1);
    }
    return {};
}

ojson parse_lenient_json(const std::string& text) {
    std::string stripped = text::strip(text);
    if (auto parsed = ojson::parse(stripped, nullptr, false); !parsed.is_discarded())
        return parsed;
    std::string block = extract_json_block(stripped);
    if (!block.empty()) {
        if (auto parsed = ojson::parse(block, nullptr, false); !parsed.is_discarded())
            return parsed;
    }
    throw DataError("not valid JSON: " + text);
}

}  // namespace ragsynth
