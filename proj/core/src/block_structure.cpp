#include "mrlft/block_structure.hpp"

#include <set>
#include <sstream>

#include "mrlft/errors.hpp"

namespace mrlft {

const char* to_string(BlockKind k) {
    switch (k) {
        case BlockKind::RealRepeatedScalar: return "real-repeated-scalar";
        case BlockKind::RealFull: return "real-full";
        case BlockKind::ComplexFull: return "complex-full";
    }
    return "?";
}

BlockSpec BlockSpec::real_scalar(const std::string& name, int repeat) {
    if (repeat < 1) throw ModelError("block '" + name + "': repetition count must be >= 1");
    return {name, name, BlockKind::RealRepeatedScalar, repeat, repeat};
}

BlockSpec BlockSpec::real_full(const std::string& name, int rows, int cols) {
    if (rows < 1 || cols < 1) throw ModelError("block '" + name + "': dimensions must be >= 1");
    return {name, name, BlockKind::RealFull, rows, cols};
}

BlockSpec BlockSpec::complex_full(const std::string& name, int rows, int cols) {
    if (rows < 1 || cols < 1) throw ModelError("block '" + name + "': dimensions must be >= 1");
    return {name, name, BlockKind::ComplexFull, rows, cols};
}

BlockStructure::BlockStructure(std::vector<BlockSpec> blocks) : blocks_(std::move(blocks)) {
    std::set<std::string> names;
    for (const auto& b : blocks_) {
        if (b.rows < 1 || b.cols < 1)
            throw ModelError("block '" + b.name + "': dimensions must be >= 1");
        if (b.kind == BlockKind::RealRepeatedScalar && b.rows != b.cols)
            throw ModelError("block '" + b.name + "': repeated scalar blocks are square");
        if (!names.insert(b.name).second)
            throw ModelError("duplicate block name '" + b.name + "'");
    }
    rebuild_offsets();
}

void BlockStructure::rebuild_offsets() {
    row_off_.resize(blocks_.size());
    col_off_.resize(blocks_.size());
    total_rows_ = total_cols_ = 0;
    for (size_t i = 0; i < blocks_.size(); ++i) {
        row_off_[i] = total_rows_;
        col_off_[i] = total_cols_;
        total_rows_ += blocks_[i].rows;
        total_cols_ += blocks_[i].cols;
    }
}

int BlockStructure::index_of(const std::string& name) const {
    for (size_t i = 0; i < blocks_.size(); ++i)
        if (blocks_[i].name == name) return static_cast<int>(i);
    return -1;
}

bool BlockStructure::has_param(const std::string& param) const {
    for (const auto& b : blocks_)
        if (b.param == param) return true;
    return false;
}

void BlockStructure::append(const BlockSpec& spec) {
    if (index_of(spec.name) >= 0)
        throw ModelError("duplicate block name '" + spec.name + "'");
    blocks_.push_back(spec);
    rebuild_offsets();
}

BlockStructure BlockStructure::augment(const BlockStructure& a, const BlockStructure& b,
                                       std::map<std::string, std::string>* renames) {
    std::vector<BlockSpec> merged = a.blocks_;
    std::set<std::string> names;
    for (const auto& blk : merged) names.insert(blk.name);
    for (BlockSpec blk : b.blocks_) {
        if (names.count(blk.name)) {
            int suffix = 2;
            std::string candidate;
            do {
                candidate = blk.name + "#" + std::to_string(suffix++);
            } while (names.count(candidate));
            if (renames) (*renames)[blk.name] = candidate;
            blk.name = candidate;
        }
        names.insert(blk.name);
        merged.push_back(std::move(blk));
    }
    return BlockStructure(std::move(merged));
}

Eigen::MatrixXcd BlockStructure::assemble(const DeltaValues& values) const {
    Eigen::MatrixXcd delta = Eigen::MatrixXcd::Zero(total_rows_, total_cols_);
    for (size_t i = 0; i < blocks_.size(); ++i) {
        const auto& b = blocks_[i];
        if (b.kind == BlockKind::RealRepeatedScalar) {
            auto it = values.scalars.find(b.param);
            double v = it == values.scalars.end() ? 0.0 : it->second;
            delta.block(row_off_[i], col_off_[i], b.rows, b.cols) =
                v * Eigen::MatrixXcd::Identity(b.rows, b.cols);
        } else {
            auto it = values.matrices.find(b.param);
            if (it == values.matrices.end()) continue;
            const Eigen::MatrixXcd& m = it->second;
            if (m.rows() != b.rows || m.cols() != b.cols)
                throw ModelError("block '" + b.name + "': value is " + std::to_string(m.rows()) +
                                 "x" + std::to_string(m.cols()) + ", expected " +
                                 std::to_string(b.rows) + "x" + std::to_string(b.cols));
            if (b.kind == BlockKind::RealFull && m.imag().cwiseAbs().maxCoeff() > 0.0)
                throw ModelError("block '" + b.name + "': complex value bound to a real block");
            delta.block(row_off_[i], col_off_[i], b.rows, b.cols) = m;
        }
    }
    return delta;
}

Eigen::MatrixXd BlockStructure::assemble_real(const DeltaValues& values) const {
    Eigen::MatrixXcd delta = assemble(values);
    if (delta.size() > 0 && delta.imag().cwiseAbs().maxCoeff() > 0.0)
        throw ModelError("structure instantiated with complex values where real required");
    return delta.real();
}

bool BlockStructure::all_real_scalars() const {
    for (const auto& b : blocks_)
        if (b.kind != BlockKind::RealRepeatedScalar) return false;
    return true;
}

std::vector<std::string> BlockStructure::scalar_params() const {
    std::vector<std::string> out;
    for (const auto& b : blocks_) {
        if (b.kind != BlockKind::RealRepeatedScalar) continue;
        bool seen = false;
        for (const auto& p : out)
            if (p == b.param) { seen = true; break; }
        if (!seen) out.push_back(b.param);
    }
    return out;
}

std::string BlockStructure::describe() const {
    std::ostringstream os;
    for (size_t i = 0; i < blocks_.size(); ++i) {
        const auto& b = blocks_[i];
        if (i) os << ", ";
        os << b.name << "(";
        if (b.kind == BlockKind::RealRepeatedScalar) {
            os << b.rows << (b.rows > 1 ? " repeated" : "");
        } else {
            os << b.rows << "x" << b.cols
               << (b.kind == BlockKind::ComplexFull ? " complex" : " real");
        }
        os << ")";
    }
    return os.str();
}

}  // namespace mrlft
