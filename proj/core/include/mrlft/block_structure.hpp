#pragma once

#include <Eigen/Dense>
#include <complex>
#include <map>
#include <string>
#include <vector>

namespace mrlft {

enum class BlockKind {
    RealRepeatedScalar,  // delta * I_n, delta real
    RealFull,            // arbitrary real matrix block
    ComplexFull,         // arbitrary complex matrix block
};

const char* to_string(BlockKind k);

// One diagonal block of an uncertainty structure. `name` is unique within a
// structure; `param` identifies the underlying uncertainty, so two blocks
// sharing a param take the same value when instantiated (replicated copies).
struct BlockSpec {
    std::string name;
    std::string param;
    BlockKind kind = BlockKind::RealRepeatedScalar;
    int rows = 1;
    int cols = 1;

    static BlockSpec real_scalar(const std::string& name, int repeat = 1);
    static BlockSpec real_full(const std::string& name, int rows, int cols);
    static BlockSpec complex_full(const std::string& name, int rows, int cols);

    bool is_scalar_kind() const { return kind == BlockKind::RealRepeatedScalar; }
};

// Values used to instantiate a structure, keyed by param. Scalar params bind
// doubles; full blocks bind matrices (real part only for RealFull).
struct DeltaValues {
    std::map<std::string, double> scalars;
    std::map<std::string, Eigen::MatrixXcd> matrices;

    static DeltaValues zero() { return {}; }
    bool empty() const { return scalars.empty() && matrices.empty(); }
};

// Ordered block-diagonal uncertainty structure. Delta closes z -> w, so a
// block occupies `rows` output rows of Delta (width of w) and `cols` input
// columns (width of z).
class BlockStructure {
public:
    BlockStructure() = default;
    explicit BlockStructure(std::vector<BlockSpec> blocks);

    const std::vector<BlockSpec>& blocks() const { return blocks_; }
    int size() const { return static_cast<int>(blocks_.size()); }
    bool empty() const { return blocks_.empty(); }

    int total_rows() const { return total_rows_; }
    int total_cols() const { return total_cols_; }

    // Offset of block i in the stacked w (rows) / z (cols) vectors.
    int row_offset(int i) const { return row_off_[i]; }
    int col_offset(int i) const { return col_off_[i]; }

    int index_of(const std::string& name) const;  // -1 if absent
    bool has_param(const std::string& param) const;

    // Block-diagonal concatenation; duplicate names in `b` get a numeric
    // suffix (param identity is preserved). `renames` collects old -> new.
    static BlockStructure augment(const BlockStructure& a, const BlockStructure& b,
                                  std::map<std::string, std::string>* renames = nullptr);

    // Structure with all listed blocks appended (no renaming, throws on dup).
    void append(const BlockSpec& spec);

    // Builds the block-diagonal Delta matrix for the given values.
    Eigen::MatrixXcd assemble(const DeltaValues& values) const;
    // Real version; throws if any complex block binds a non-real value.
    Eigen::MatrixXd assemble_real(const DeltaValues& values) const;

    // True when every block is a real repeated scalar.
    bool all_real_scalars() const;

    // Distinct params of real scalar blocks, in first-appearance order.
    std::vector<std::string> scalar_params() const;

    std::string describe() const;  // e.g. "dJ(1), dw(2x2 repeated), eps(5x5 full)"

private:
    void rebuild_offsets();

    std::vector<BlockSpec> blocks_;
    std::vector<int> row_off_, col_off_;
    int total_rows_ = 0;
    int total_cols_ = 0;
};

}  // namespace mrlft
