#pragma once

#include <string>
#include <vector>

#include "refactor/python_lexer.hpp"

namespace refactor::py {

enum class BlockKind { Module, Function, Class };

/// One complexity block: the module, a function/method body, or a class
/// body. `decisions` counts only the block's own decision points, not
/// those of nested blocks.
struct Block {
    BlockKind kind = BlockKind::Module;
    std::string name;  // dotted path, empty for the module block
    int start_line = 1;
    int decisions = 0;

    int complexity() const { return decisions + 1; }
};

struct StructureInfo {
    std::vector<Block> blocks;  // blocks[0] is always the module block

    int total_decisions() const {
        int sum = 0;
        for (const auto& b : blocks) sum += b.decisions;
        return sum;
    }
    /// Whole-program complexity: one shared base plus every decision point.
    int program_complexity() const { return total_decisions() + 1; }
};

/// Validates statement/suite structure of a lexed program and counts
/// decision points per block. Throws CCError with a diagnostic when the
/// program is structurally invalid (missing suite colon, bad else/except
/// placement, unexpected indent, ...).
StructureInfo analyze_structure(const std::vector<Token>& tokens);

}  // namespace refactor::py
