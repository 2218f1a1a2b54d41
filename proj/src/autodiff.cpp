#include "sgnlg/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sgnlg::ad {

std::uint64_t DetRng::bits() {
    // splitmix64 step; cheap and passes the determinism bar set for runs.
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

double DetRng::uniform() { return static_cast<double>(bits() >> 11) * (1.0 / 9007199254740992.0); }

double DetRng::uniform(double a, double b) { return a + (b - a) * uniform(); }

double DetRng::normal() {
    double u1 = uniform(), u2 = uniform();
    u1 = std::max(u1, 1e-300);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

int DetRng::uniform_int(int n) {
    if (n <= 0) throw std::invalid_argument("uniform_int needs n > 0");
    return static_cast<int>(bits() % static_cast<std::uint64_t>(n));
}

// ---------------------------------------------------------------------------

int ParamStore::add(const std::string& name, int rows, int cols, double init_scale, DetRng& rng) {
    if (index_.count(name)) throw std::invalid_argument("duplicate parameter: " + name);
    Tensor t;
    t.name = name;
    t.rows = rows;
    t.cols = cols;
    t.value.resize(static_cast<size_t>(rows) * cols);
    for (auto& v : t.value) v = rng.uniform(-init_scale, init_scale);
    t.grad.assign(t.value.size(), 0.0);
    t.m.assign(t.value.size(), 0.0);
    t.v.assign(t.value.size(), 0.0);
    index_[name] = static_cast<int>(tensors_.size());
    tensors_.push_back(std::move(t));
    return index_[name];
}

int ParamStore::add_zeros(const std::string& name, int rows, int cols) {
    DetRng rng(0);
    return add(name, rows, cols, 0.0, rng);
}

int ParamStore::add_glorot(const std::string& name, int rows, int cols, DetRng& rng) {
    double scale = std::sqrt(6.0 / (static_cast<double>(rows) + static_cast<double>(cols)));
    return add(name, rows, cols, scale, rng);
}

int ParamStore::find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? -1 : it->second;
}

void ParamStore::zero_grad() {
    for (auto& t : tensors_) std::fill(t.grad.begin(), t.grad.end(), 0.0);
}

long long ParamStore::parameter_count() const {
    long long n = 0;
    for (const auto& t : tensors_) n += t.size();
    return n;
}

void Adam::step(ParamStore& store) {
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (int i = 0; i < store.count(); ++i) {
        Tensor& t = store.tensor(i);
        for (size_t j = 0; j < t.value.size(); ++j) {
            double g = t.grad[j];
            t.m[j] = beta1_ * t.m[j] + (1.0 - beta1_) * g;
            t.v[j] = beta2_ * t.v[j] + (1.0 - beta2_) * g * g;
            double mhat = t.m[j] / bc1;
            double vhat = t.v[j] / bc2;
            t.value[j] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

// ---------------------------------------------------------------------------

int Graph::push(Node n) {
    n.grad.assign(n.val.size(), 0.0);
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

int Graph::constant(std::vector<double> v) {
    Node n;
    n.op = Op::kConst;
    n.val = std::move(v);
    return push(std::move(n));
}

int Graph::scalar(double v) { return constant({v}); }

int Graph::zeros(int sz) { return constant(std::vector<double>(sz, 0.0)); }

int Graph::param(int tensor_id) {
    Node n;
    n.op = Op::kParam;
    n.tensor = tensor_id;
    n.val = store_->tensor(tensor_id).value;
    return push(std::move(n));
}

int Graph::row(int tensor_id, int r) {
    const Tensor& t = store_->tensor(tensor_id);
    if (r < 0 || r >= t.rows) throw std::out_of_range("row index out of range for " + t.name);
    Node n;
    n.op = Op::kRow;
    n.tensor = tensor_id;
    n.aux = r;
    n.val.assign(t.value.begin() + static_cast<long>(r) * t.cols,
                 t.value.begin() + static_cast<long>(r + 1) * t.cols);
    return push(std::move(n));
}

namespace {
void check_same_size(const std::vector<double>& a, const std::vector<double>& b,
                     const char* what) {
    if (a.size() != b.size()) throw std::invalid_argument(std::string(what) + ": size mismatch");
}
}  // namespace

int Graph::add(int a, int b) {
    check_same_size(nodes_[a].val, nodes_[b].val, "add");
    Node n;
    n.op = Op::kAdd;
    n.in = {a, b};
    n.val = nodes_[a].val;
    for (size_t i = 0; i < n.val.size(); ++i) n.val[i] += nodes_[b].val[i];
    return push(std::move(n));
}

int Graph::sub(int a, int b) {
    check_same_size(nodes_[a].val, nodes_[b].val, "sub");
    Node n;
    n.op = Op::kSub;
    n.in = {a, b};
    n.val = nodes_[a].val;
    for (size_t i = 0; i < n.val.size(); ++i) n.val[i] -= nodes_[b].val[i];
    return push(std::move(n));
}

int Graph::mul(int a, int b) {
    check_same_size(nodes_[a].val, nodes_[b].val, "mul");
    Node n;
    n.op = Op::kMul;
    n.in = {a, b};
    n.val = nodes_[a].val;
    for (size_t i = 0; i < n.val.size(); ++i) n.val[i] *= nodes_[b].val[i];
    return push(std::move(n));
}

int Graph::scale(int a, double c) {
    Node n;
    n.op = Op::kScale;
    n.in = {a};
    n.c = c;
    n.val = nodes_[a].val;
    for (auto& v : n.val) v *= c;
    return push(std::move(n));
}

int Graph::sigmoid(int a) {
    Node n;
    n.op = Op::kSigmoid;
    n.in = {a};
    n.val = nodes_[a].val;
    for (auto& v : n.val) {
        v = 1.0 / (1.0 + std::exp(-v));
        v = std::min(std::max(v, 1e-12), 1.0 - 1e-12);
    }
    return push(std::move(n));
}

int Graph::tanh_(int a) {
    Node n;
    n.op = Op::kTanh;
    n.in = {a};
    n.val = nodes_[a].val;
    for (auto& v : n.val) v = std::tanh(v);
    return push(std::move(n));
}

int Graph::exp_(int a) {
    Node n;
    n.op = Op::kExp;
    n.in = {a};
    n.val = nodes_[a].val;
    for (auto& v : n.val) v = std::exp(v);
    return push(std::move(n));
}

int Graph::matvec(int w, int x, int rows, int cols) {
    if (static_cast<int>(nodes_[w].val.size()) != rows * cols)
        throw std::invalid_argument("matvec: weight size != rows*cols");
    if (static_cast<int>(nodes_[x].val.size()) != cols)
        throw std::invalid_argument("matvec: input size != cols");
    Node n;
    n.op = Op::kMatvec;
    n.in = {w, x};
    n.idx = {rows, cols};
    n.val.assign(rows, 0.0);
    const auto& wv = nodes_[w].val;
    const auto& xv = nodes_[x].val;
    for (int r = 0; r < rows; ++r) {
        double acc = 0.0;
        const double* wr = wv.data() + static_cast<long>(r) * cols;
        for (int c = 0; c < cols; ++c) acc += wr[c] * xv[c];
        n.val[r] = acc;
    }
    return push(std::move(n));
}

int Graph::dot(int a, int b) {
    check_same_size(nodes_[a].val, nodes_[b].val, "dot");
    Node n;
    n.op = Op::kDot;
    n.in = {a, b};
    double acc = 0.0;
    for (size_t i = 0; i < nodes_[a].val.size(); ++i) acc += nodes_[a].val[i] * nodes_[b].val[i];
    n.val = {acc};
    return push(std::move(n));
}

int Graph::softmax(int a) {
    Node n;
    n.op = Op::kSoftmax;
    n.in = {a};
    n.val = nodes_[a].val;
    double mx = *std::max_element(n.val.begin(), n.val.end());
    double sum = 0.0;
    for (auto& v : n.val) {
        v = std::exp(v - mx);
        sum += v;
    }
    for (auto& v : n.val) v /= sum;
    return push(std::move(n));
}

int Graph::concat(const std::vector<int>& xs) {
    Node n;
    n.op = Op::kConcat;
    n.in = xs;
    for (int x : xs) n.val.insert(n.val.end(), nodes_[x].val.begin(), nodes_[x].val.end());
    return push(std::move(n));
}

int Graph::slice(int a, int begin, int len) {
    if (begin < 0 || begin + len > static_cast<int>(nodes_[a].val.size()))
        throw std::out_of_range("slice out of range");
    Node n;
    n.op = Op::kSlice;
    n.in = {a};
    n.idx = {begin, len};
    n.val.assign(nodes_[a].val.begin() + begin, nodes_[a].val.begin() + begin + len);
    return push(std::move(n));
}

int Graph::pad(int a, int new_size) {
    if (new_size < static_cast<int>(nodes_[a].val.size()))
        throw std::invalid_argument("pad: new size smaller than input");
    Node n;
    n.op = Op::kPad;
    n.in = {a};
    n.val = nodes_[a].val;
    n.val.resize(new_size, 0.0);
    return push(std::move(n));
}

int Graph::weighted_sum(int weights, const std::vector<int>& xs) {
    if (nodes_[weights].val.size() != xs.size())
        throw std::invalid_argument("weighted_sum: weight count != input count");
    Node n;
    n.op = Op::kWeightedSum;
    n.in.push_back(weights);
    n.in.insert(n.in.end(), xs.begin(), xs.end());
    size_t dim = nodes_[xs.at(0)].val.size();
    n.val.assign(dim, 0.0);
    for (size_t t = 0; t < xs.size(); ++t) {
        check_same_size(nodes_[xs[t]].val, n.val, "weighted_sum");
        double w = nodes_[weights].val[t];
        for (size_t i = 0; i < dim; ++i) n.val[i] += w * nodes_[xs[t]].val[i];
    }
    return push(std::move(n));
}

int Graph::mix_copy(int p_gen, int p_vocab, int attention, std::vector<int> copy_ids) {
    if (nodes_[p_gen].val.size() != 1) throw std::invalid_argument("mix_copy: p_gen not scalar");
    if (copy_ids.size() != nodes_[attention].val.size())
        throw std::invalid_argument("mix_copy: copy_ids count != attention length");
    Node n;
    n.op = Op::kMixCopy;
    n.in = {p_gen, p_vocab, attention};
    n.idx = std::move(copy_ids);
    double g = nodes_[p_gen].val[0];
    n.val = nodes_[p_vocab].val;
    for (auto& v : n.val) v *= g;
    const auto& attn = nodes_[attention].val;
    for (size_t t = 0; t < attn.size(); ++t) {
        int id = n.idx[t];
        if (id < 0 || id >= static_cast<int>(n.val.size()))
            throw std::out_of_range("mix_copy: copy id outside extended vocabulary");
        n.val[id] += (1.0 - g) * attn[t];
    }
    return push(std::move(n));
}

int Graph::gaussian_kl(int mu_q, int logvar_q, int mu_p, int logvar_p) {
    check_same_size(nodes_[mu_q].val, nodes_[logvar_q].val, "gaussian_kl");
    check_same_size(nodes_[mu_q].val, nodes_[mu_p].val, "gaussian_kl");
    check_same_size(nodes_[mu_q].val, nodes_[logvar_p].val, "gaussian_kl");
    Node n;
    n.op = Op::kGaussianKl;
    n.in = {mu_q, logvar_q, mu_p, logvar_p};
    double kl = 0.0;
    for (size_t i = 0; i < nodes_[mu_q].val.size(); ++i) {
        double lq = nodes_[logvar_q].val[i], lp = nodes_[logvar_p].val[i];
        double dm = nodes_[mu_q].val[i] - nodes_[mu_p].val[i];
        kl += 0.5 * (lp - lq + (std::exp(lq) + dm * dm) * std::exp(-lp) - 1.0);
    }
    n.val = {kl};
    return push(std::move(n));
}

int Graph::neg_log_pick(int p, int index) {
    if (index < 0 || index >= static_cast<int>(nodes_[p].val.size()))
        throw std::out_of_range("neg_log_pick index out of range");
    Node n;
    n.op = Op::kNegLogPick;
    n.in = {p};
    n.aux = index;
    n.val = {-std::log(std::max(nodes_[p].val[index], 1e-12))};
    return push(std::move(n));
}

void Graph::backward(int loss_id) {
    if (nodes_[loss_id].val.size() != 1)
        throw std::invalid_argument("backward expects a scalar loss");
    for (auto& n : nodes_) std::fill(n.grad.begin(), n.grad.end(), 0.0);
    nodes_[loss_id].grad[0] = 1.0;

    for (int id = loss_id; id >= 0; --id) {
        Node& n = nodes_[id];
        bool live = false;
        for (double g : n.grad)
            if (g != 0.0) {
                live = true;
                break;
            }
        if (!live) continue;
        switch (n.op) {
            case Op::kConst:
                break;
            case Op::kParam: {
                Tensor& t = store_->tensor(n.tensor);
                for (size_t i = 0; i < n.grad.size(); ++i) t.grad[i] += n.grad[i];
                break;
            }
            case Op::kRow: {
                Tensor& t = store_->tensor(n.tensor);
                long base = static_cast<long>(n.aux) * t.cols;
                for (size_t i = 0; i < n.grad.size(); ++i) t.grad[base + i] += n.grad[i];
                break;
            }
            case Op::kAdd:
                for (size_t i = 0; i < n.grad.size(); ++i) {
                    nodes_[n.in[0]].grad[i] += n.grad[i];
                    nodes_[n.in[1]].grad[i] += n.grad[i];
                }
                break;
            case Op::kSub:
                for (size_t i = 0; i < n.grad.size(); ++i) {
                    nodes_[n.in[0]].grad[i] += n.grad[i];
                    nodes_[n.in[1]].grad[i] -= n.grad[i];
                }
                break;
            case Op::kMul:
                for (size_t i = 0; i < n.grad.size(); ++i) {
                    nodes_[n.in[0]].grad[i] += n.grad[i] * nodes_[n.in[1]].val[i];
                    nodes_[n.in[1]].grad[i] += n.grad[i] * nodes_[n.in[0]].val[i];
                }
                break;
            case Op::kScale:
                for (size_t i = 0; i < n.grad.size(); ++i)
                    nodes_[n.in[0]].grad[i] += n.grad[i] * n.c;
                break;
            case Op::kSigmoid:
                for (size_t i = 0; i < n.grad.size(); ++i) {
                    double s = n.val[i];
                    nodes_[n.in[0]].grad[i] += n.grad[i] * s * (1.0 - s);
                }
                break;
            case Op::kTanh:
                for (size_t i = 0; i < n.grad.size(); ++i) {
                    double t = n.val[i];
                    nodes_[n.in[0]].grad[i] += n.grad[i] * (1.0 - t * t);
                }
                break;
            case Op::kExp:
                for (size_t i = 0; i < n.grad.size(); ++i)
                    nodes_[n.in[0]].grad[i] += n.grad[i] * n.val[i];
                break;
            case Op::kMatvec: {
                int rows = n.idx[0], cols = n.idx[1];
                auto& wg = nodes_[n.in[0]].grad;
                auto& xg = nodes_[n.in[1]].grad;
                const auto& wv = nodes_[n.in[0]].val;
                const auto& xv = nodes_[n.in[1]].val;
                for (int r = 0; r < rows; ++r) {
                    double g = n.grad[r];
                    if (g == 0.0) continue;
                    long base = static_cast<long>(r) * cols;
                    for (int c = 0; c < cols; ++c) {
                        wg[base + c] += g * xv[c];
                        xg[c] += g * wv[base + c];
                    }
                }
                break;
            }
            case Op::kDot: {
                double g = n.grad[0];
                for (size_t i = 0; i < nodes_[n.in[0]].val.size(); ++i) {
                    nodes_[n.in[0]].grad[i] += g * nodes_[n.in[1]].val[i];
                    nodes_[n.in[1]].grad[i] += g * nodes_[n.in[0]].val[i];
                }
                break;
            }
            case Op::kSoftmax: {
                double dotgs = 0.0;
                for (size_t i = 0; i < n.val.size(); ++i) dotgs += n.grad[i] * n.val[i];
                for (size_t i = 0; i < n.val.size(); ++i)
                    nodes_[n.in[0]].grad[i] += n.val[i] * (n.grad[i] - dotgs);
                break;
            }
            case Op::kConcat: {
                size_t off = 0;
                for (int x : n.in) {
                    for (size_t i = 0; i < nodes_[x].val.size(); ++i)
                        nodes_[x].grad[i] += n.grad[off + i];
                    off += nodes_[x].val.size();
                }
                break;
            }
            case Op::kSlice:
                for (size_t i = 0; i < n.val.size(); ++i)
                    nodes_[n.in[0]].grad[n.idx[0] + i] += n.grad[i];
                break;
            case Op::kPad:
                for (size_t i = 0; i < nodes_[n.in[0]].val.size(); ++i)
                    nodes_[n.in[0]].grad[i] += n.grad[i];
                break;
            case Op::kWeightedSum: {
                int weights = n.in[0];
                for (size_t t = 1; t < n.in.size(); ++t) {
                    int x = n.in[t];
                    double w = nodes_[weights].val[t - 1];
                    double acc = 0.0;
                    for (size_t i = 0; i < n.grad.size(); ++i) {
                        nodes_[x].grad[i] += w * n.grad[i];
                        acc += n.grad[i] * nodes_[x].val[i];
                    }
                    nodes_[weights].grad[t - 1] += acc;
                }
                break;
            }
            case Op::kMixCopy: {
                int p_gen = n.in[0], p_vocab = n.in[1], attention = n.in[2];
                double g = nodes_[p_gen].val[0];
                double dg = 0.0;
                for (size_t i = 0; i < n.grad.size(); ++i) {
                    nodes_[p_vocab].grad[i] += g * n.grad[i];
                    dg += n.grad[i] * nodes_[p_vocab].val[i];
                }
                const auto& attn = nodes_[attention].val;
                for (size_t t = 0; t < attn.size(); ++t) {
                    double gi = n.grad[n.idx[t]];
                    nodes_[attention].grad[t] += (1.0 - g) * gi;
                    dg -= gi * attn[t];
                }
                nodes_[p_gen].grad[0] += dg;
                break;
            }
            case Op::kGaussianKl: {
                double g = n.grad[0];
                auto& muq = nodes_[n.in[0]];
                auto& lq = nodes_[n.in[1]];
                auto& mup = nodes_[n.in[2]];
                auto& lp = nodes_[n.in[3]];
                for (size_t i = 0; i < muq.val.size(); ++i) {
                    double dm = muq.val[i] - mup.val[i];
                    double elp = std::exp(-lp.val[i]);
                    double elq = std::exp(lq.val[i]);
                    muq.grad[i] += g * dm * elp;
                    mup.grad[i] -= g * dm * elp;
                    lq.grad[i] += g * 0.5 * (elq * elp - 1.0);
                    lp.grad[i] += g * 0.5 * (1.0 - (elq + dm * dm) * elp);
                }
                break;
            }
            case Op::kNegLogPick: {
                double p = std::max(nodes_[n.in[0]].val[n.aux], 1e-12);
                nodes_[n.in[0]].grad[n.aux] += n.grad[0] * (-1.0 / p);
                break;
            }
        }
    }
}

}  // namespace sgnlg::ad
