#pragma once

#include <map>
#include <mutex>
#include <string>

namespace clarify {

// Loads versioned prompt template files from <dir>/<name>.txt and fills
// <placeholder> markers. Templates are read once and cached.
class PromptLibrary {
public:
    explicit PromptLibrary(std::string dir);

    const std::string& raw(const std::string& name) const;
    std::string render(const std::string& name,
                       const std::map<std::string, std::string>& substitutions) const;

private:
    std::string dir_;
    mutable std::mutex mutex_;
    mutable std::map<std::string, std::string> cache_;
};

std::string substitute_placeholders(std::string text,
                                    const std::map<std::string, std::string>& substitutions);

} // namespace clarify
