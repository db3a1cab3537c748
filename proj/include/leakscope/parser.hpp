#pragma once

#include <string>

#include "leakscope/ast.hpp"

namespace leakscope::lang {

class ParseError : public Error {
public:
    ParseError(const std::string& msg, SourceLoc loc)
        : Error(msg + " (line " + std::to_string(loc.line) + ", col " +
                std::to_string(loc.col) + ")"),
          loc(loc) {}
    SourceLoc loc;
};

// Parse a .ppl source text. Performs use-before-define validation on the
// unrolled body and rejects duplicate parameter declarations.
Program parse(const std::string& source);

}  // namespace leakscope::lang
