#pragma once

#include <array>
#include <cctype>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

namespace tsup {

struct CommandResult {
    int exit_code = -1;
    std::string output; // stdout + stderr interleaved
};

inline CommandResult run_command(const std::string& cmd) {
    CommandResult result;
    FILE* pipe = popen((cmd + " 2>&1").c_str(), "r");
    if (!pipe) return result;
    std::array<char, 4096> buf;
    while (fgets(buf.data(), buf.size(), pipe)) result.output += buf.data();
    const int status = pclose(pipe);
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return result;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

/// Splits into whitespace-delimited tokens; two files agree when non-numeric
/// tokens match byte for byte and numeric tokens match within `tol`.
inline std::vector<std::string> tokenize(const std::string& text) {
    std::vector<std::string> tokens;
    std::istringstream in(text);
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
}

inline bool numeric_token(const std::string& tok, double& value) {
    char* end = nullptr;
    value = std::strtod(tok.c_str(), &end);
    return end != tok.c_str() && *end == '\0';
}

inline bool text_matches(const std::string& actual, const std::string& expected,
                         double tol = 1e-6) {
    auto at = tokenize(actual);
    auto et = tokenize(expected);
    if (at.size() != et.size()) return false;
    for (size_t i = 0; i < at.size(); ++i) {
        if (at[i] == et[i]) continue;
        double a = 0.0, e = 0.0;
        if (!numeric_token(at[i], a) || !numeric_token(et[i], e)) return false;
        const double scale = std::max(1.0, std::abs(e));
        if (std::abs(a - e) > tol * scale) return false;
    }
    return true;
}

} // namespace tsup
