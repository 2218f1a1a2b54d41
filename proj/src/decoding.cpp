#include "sgnlg/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sgnlg/schema.hpp"

namespace sgnlg::dec {

namespace {

DecodeResult finish(const StepDecoder& model, const BeamNode& node) {
    DecodeResult r;
    r.log_prob = node.log_prob;
    r.ended = node.ended;
    for (int id : node.prefix) {
        std::string token = model.token_name(id);
        if (!r.text.empty()) r.text += ' ';
        r.text += token;
        r.tokens.push_back(std::move(token));
    }
    return r;
}

bool prefix_less(const std::vector<int>& a, const std::vector<int>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end());
}

// Higher score first; equal scores break lexicographically on token ids.
bool node_before(const BeamNode& a, const BeamNode& b) {
    if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
    return prefix_less(a.prefix, b.prefix);
}

bool holds_placeholder(const BeamNode& node, const std::string& token) {
    return std::binary_search(node.emitted_placeholders.begin(),
                              node.emitted_placeholders.end(), token);
}

}  // namespace

DecodeResult constrained_beam_decode(const StepDecoder& model, int beam_width, int max_len) {
    if (beam_width < 1) throw std::invalid_argument("beam width must be >= 1");
    if (max_len < 1) throw std::invalid_argument("max length must be >= 1");

    BeamNode root;
    root.state = model.initial_state();
    std::vector<BeamNode> beam = {root};

    for (int step = 0; step < max_len; ++step) {
        std::vector<BeamNode> candidates;
        bool any_live = false;
        for (const BeamNode& node : beam) {
            if (node.ended) {
                candidates.push_back(node);
                continue;
            }
            any_live = true;
            int prev = node.prefix.empty() ? model.bos_id() : node.prefix.back();
            auto [dist, next_state] = model.step(node.state, prev);
            for (int id = 0; id < static_cast<int>(dist.size()); ++id) {
                double p = dist[id];
                if (p <= 0.0) continue;
                if (id == model.pad_id() || id == model.bos_id()) continue;
                std::string token = model.token_name(id);
                bool placeholder = is_placeholder_token(token);
                if (placeholder && holds_placeholder(node, token)) continue;  // pruned
                BeamNode cand = node;
                cand.prefix.push_back(id);
                cand.log_prob += std::log(p);
                cand.state = next_state;
                if (placeholder) {
                    cand.emitted_placeholders.insert(
                        std::upper_bound(cand.emitted_placeholders.begin(),
                                         cand.emitted_placeholders.end(), token),
                        token);
                }
                if (id == model.eos_id()) {
                    cand.prefix.pop_back();  // EOS closes but is not part of the output
                    cand.ended = true;
                }
                candidates.push_back(std::move(cand));
            }
        }
        if (!any_live) break;
        if (candidates.empty()) {
            // Every expansion of every hypothesis was pruned: fall back to
            // the best hypothesis so far, complete as it stands.
            std::sort(beam.begin(), beam.end(), node_before);
            return finish(model, beam.front());
        }
        std::sort(candidates.begin(), candidates.end(), node_before);
        if (static_cast<int>(candidates.size()) > beam_width) candidates.resize(beam_width);
        beam = std::move(candidates);
        bool all_ended = true;
        for (const BeamNode& node : beam)
            if (!node.ended) {
                all_ended = false;
                break;
            }
        if (all_ended) break;
    }

    std::sort(beam.begin(), beam.end(), [](const BeamNode& a, const BeamNode& b) {
        if (a.ended != b.ended) return a.ended;  // completed hypotheses first
        return node_before(a, b);
    });
    return finish(model, beam.front());
}

DecodeResult masked_greedy_decode(const StepDecoder& model, int max_len) {
    BeamNode node;
    node.state = model.initial_state();
    for (int step = 0; step < max_len; ++step) {
        int prev = node.prefix.empty() ? model.bos_id() : node.prefix.back();
        auto [dist, next_state] = model.step(node.state, prev);
        int best = -1;
        double best_p = 0.0;
        for (int id = 0; id < static_cast<int>(dist.size()); ++id) {
            if (id == model.pad_id() || id == model.bos_id()) continue;
            double p = dist[id];
            if (p <= 0.0) continue;
            std::string token = model.token_name(id);
            if (is_placeholder_token(token) && holds_placeholder(node, token)) continue;
            if (p > best_p) {
                best_p = p;
                best = id;
            }
        }
        if (best < 0) break;
        if (best == model.eos_id()) {
            node.ended = true;
            node.log_prob += std::log(best_p);
            break;
        }
        node.prefix.push_back(best);
        node.log_prob += std::log(best_p);
        std::string token = model.token_name(best);
        if (is_placeholder_token(token))
            node.emitted_placeholders.insert(
                std::upper_bound(node.emitted_placeholders.begin(),
                                 node.emitted_placeholders.end(), token),
                token);
        node.state = next_state;
    }
    return finish(model, node);
}

DecodeResult topk_sample_decode(const StepDecoder& model, int k, std::uint64_t seed,
                                int max_len) {
    if (k < 1) throw std::invalid_argument("top-k needs k >= 1");
    ad::DetRng rng(seed);
    BeamNode node;
    node.state = model.initial_state();
    for (int step = 0; step < max_len; ++step) {
        int prev = node.prefix.empty() ? model.bos_id() : node.prefix.back();
        auto [dist, next_state] = model.step(node.state, prev);
        std::vector<std::pair<double, int>> ranked;  // (-p, id) for stable ordering
        for (int id = 0; id < static_cast<int>(dist.size()); ++id) {
            if (id == model.pad_id() || id == model.bos_id()) continue;
            if (dist[id] > 0.0) ranked.emplace_back(-dist[id], id);
        }
        if (ranked.empty()) break;
        std::sort(ranked.begin(), ranked.end());
        if (static_cast<int>(ranked.size()) > k) ranked.resize(k);
        double total = 0.0;
        for (const auto& [negp, id] : ranked) total -= negp;
        // Inverse-CDF draw; last bucket absorbs rounding.
        double u = rng.uniform() * total;
        int chosen = ranked.back().second;
        double chosen_p = -ranked.back().first;
        double acc = 0.0;
        for (const auto& [negp, id] : ranked) {
            acc += -negp;
            if (u < acc) {
                chosen = id;
                chosen_p = -negp;
                break;
            }
        }
        node.log_prob += std::log(chosen_p / total);
        if (chosen == model.eos_id()) {
            node.ended = true;
            break;
        }
        node.prefix.push_back(chosen);
        node.state = next_state;
    }
    return finish(model, node);
}

}  // namespace sgnlg::dec
