#include "clarify/prompts.hpp"

#include <fstream>
#include <sstream>

#include "clarify/errors.hpp"

namespace clarify {

PromptLibrary::PromptLibrary(std::string dir) : dir_(std::move(dir)) {}

const std::string& PromptLibrary::raw(const std::string& name) const {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = cache_.find(name);
    if (it != cache_.end()) return it->second;
    const std::string path = dir_ + "/" + name + ".txt";
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("prompt template not found: " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return cache_.emplace(name, buffer.str()).first->second;
}

std::string PromptLibrary::render(const std::string& name,
                                  const std::map<std::string, std::string>& substitutions) const {
    return substitute_placeholders(raw(name), substitutions);
}

std::string substitute_placeholders(std::string text,
                                    const std::map<std::string, std::string>& substitutions) {
    for (const auto& [key, value] : substitutions) {
        const std::string placeholder = "<" + key + ">";
        size_t pos = 0;
        while ((pos = text.find(placeholder, pos)) != std::string::npos) {
            text.replace(pos, placeholder.size(), value);
            pos += value.size();
        }
    }
    return text;
}

} // namespace clarify
