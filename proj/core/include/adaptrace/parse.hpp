#ifndef ADAPTRACE_PARSE_HPP
#define ADAPTRACE_PARSE_HPP

#include <stdexcept>

#include "adaptrace/ast.hpp"

namespace adaptrace {

struct SourcePos {
    int line = 1;
    int col = 1;
};

/// Parse failure with position and the token set that would have been
/// accepted. Runtime-only constructs (block/release/clr) in source are
/// reported through the same channel with a dedicated message.
class ParseError : public std::runtime_error {
  public:
    ParseError(SourcePos pos, std::string message, std::vector<std::string> expected = {});

    SourcePos pos;
    std::string message;
    std::vector<std::string> expected;
};

/// A parsed script: the declared pid universe, the initial value environment
/// from the `types:` header, and the property formula.
struct Script {
    std::set<std::string> pids;
    std::map<std::string, VType> types;  // pid name -> declared type
    FPtr formula;
};

/// Parses a full script file (optional `pids:` / `types:` headers, then one
/// formula). Identifier classification inside patterns: a type-annotated or
/// already-bound name is a term variable, as is any name starting with an
/// uppercase letter; a declared pid name is a pid literal; anything else
/// lowercase is an atom. Throws ParseError.
Script parse_script(const std::string& source);

/// Parses a single formula against a given pid set (no headers).
FPtr parse_formula(const std::string& source, const std::set<std::string>& pids);

/// Trace files: one closed action per line, `send i j {inc,5,h}`,
/// `recv i {inc,5,h}`, `call i {mod,fun,2,args}`, `ret i {mod,fun,2,val}`.
/// Identifiers in `pids` (plus all subject positions) parse as pid values.
std::vector<Action> parse_trace(const std::string& text, const std::set<std::string>& pids);

std::string format_error(const ParseError& e);

}  // namespace adaptrace

#endif
