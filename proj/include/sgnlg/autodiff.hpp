#pragma once

// Tape-based reverse-mode autodiff over double vectors. A Graph is built
// per training step; nodes are indices into the tape. Parameters live in a
// ParamStore shared across steps; backward() accumulates parameter
// gradients into the store. Scalars are size-1 vectors.

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace sgnlg::ad {

// Deterministic RNG built on mt19937_64 bit draws only, so sequences are
// identical across standard libraries.
class DetRng {
  public:
    explicit DetRng(std::uint64_t seed) : state_(seed) {}
    std::uint64_t bits();
    double uniform();                    // [0, 1)
    double uniform(double a, double b);  // [a, b)
    double normal();                     // Box-Muller, no caching
    int uniform_int(int n);              // [0, n)

  private:
    std::uint64_t state_;
};

struct Tensor {
    std::string name;
    int rows = 0;
    int cols = 0;  // cols == 1 for vectors
    std::vector<double> value;
    std::vector<double> grad;
    std::vector<double> m, v;  // optimizer moments

    int size() const { return rows * cols; }
};

class ParamStore {
  public:
    int add(const std::string& name, int rows, int cols, double init_scale, DetRng& rng);
    int add_zeros(const std::string& name, int rows, int cols);
    // Glorot-uniform convenience: scale = sqrt(6 / (rows + cols)).
    int add_glorot(const std::string& name, int rows, int cols, DetRng& rng);

    int find(const std::string& name) const;  // -1 when absent
    Tensor& tensor(int id) { return tensors_[id]; }
    const Tensor& tensor(int id) const { return tensors_[id]; }
    int count() const { return static_cast<int>(tensors_.size()); }

    void zero_grad();
    long long parameter_count() const;

  private:
    std::vector<Tensor> tensors_;
    std::map<std::string, int> index_;
};

class Adam {
  public:
    explicit Adam(double lr = 1e-3, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}
    void step(ParamStore& store);
    void set_lr(double lr) { lr_ = lr; }
    double lr() const { return lr_; }
    long long steps_taken() const { return t_; }

  private:
    double lr_, beta1_, beta2_, eps_;
    long long t_ = 0;
};

class Graph {
  public:
    explicit Graph(ParamStore* store) : store_(store) {}

    // Leaves
    int constant(std::vector<double> v);
    int scalar(double v);
    int zeros(int n);
    int param(int tensor_id);           // whole tensor, flattened row-major
    int row(int tensor_id, int r);      // one row of a matrix (embedding lookup)

    // Elementwise
    int add(int a, int b);
    int sub(int a, int b);
    int mul(int a, int b);
    int scale(int a, double c);
    int sigmoid(int a);  // output clamped to [1e-12, 1 - 1e-12]
    int tanh_(int a);
    int exp_(int a);

    // Shape / reduction
    int matvec(int w, int x, int rows, int cols);  // w holds rows*cols values
    int dot(int a, int b);
    int softmax(int a);
    int concat(const std::vector<int>& xs);
    int slice(int a, int begin, int len);
    int pad(int a, int new_size);  // zero-extend on the right
    int weighted_sum(int weights, const std::vector<int>& xs);

    // P(w) = p_gen * p_vocab + (1 - p_gen) * sum of attention mass routed
    // through copy_ids (copy_ids[t] = extended-vocab id fed by timestep t).
    int mix_copy(int p_gen, int p_vocab, int attention, std::vector<int> copy_ids);

    // KL(N(mu_q, e^{logvar_q}) || N(mu_p, e^{logvar_p})), summed over dims.
    int gaussian_kl(int mu_q, int logvar_q, int mu_p, int logvar_p);

    // -log(max(p[index], 1e-12))
    int neg_log_pick(int p, int index);

    const std::vector<double>& value(int id) const { return nodes_[id].val; }
    const std::vector<double>& grad(int id) const { return nodes_[id].grad; }
    int size_of(int id) const { return static_cast<int>(nodes_[id].val.size()); }

    void backward(int loss_id);

  private:
    enum class Op {
        kConst, kParam, kRow, kAdd, kSub, kMul, kScale, kSigmoid, kTanh, kExp,
        kMatvec, kDot, kSoftmax, kConcat, kSlice, kPad, kWeightedSum, kMixCopy,
        kGaussianKl, kNegLogPick
    };
    struct Node {
        Op op;
        std::vector<int> in;
        std::vector<double> val;
        std::vector<double> grad;
        std::vector<int> idx;  // op-specific integers
        double c = 0.0;
        int tensor = -1;
        int aux = 0;
    };
    int push(Node n);
    ParamStore* store_;
    std::vector<Node> nodes_;
};

}  // namespace sgnlg::ad
