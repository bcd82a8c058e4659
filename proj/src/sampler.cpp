#include "mixlab/sampler.hpp"

#include <algorithm>
#include <limits>
#include <unordered_set>

#include <json.hpp>

namespace mixlab {

Digraph::Digraph(std::shared_ptr<const DegreeSequence> seq, std::vector<Vertex> heads,
                 std::uint64_t seed, std::uint64_t stream)
    : seq_(std::move(seq)), heads_(std::move(heads)), seed_(seed), stream_(stream) {
    const auto out = seq_->out_degrees();
    offsets_.resize(out.size() + 1);
    offsets_[0] = 0;
    for (std::size_t x = 0; x < out.size(); ++x) offsets_[x + 1] = offsets_[x] + out[x];
    if (offsets_.back() != heads_.size()) {
        throw Error(ErrorCode::LengthMismatch, "edge list does not match the out-degrees");
    }
    for (Vertex y : heads_) {
        if (y >= out.size()) throw Error(ErrorCode::BadRange, "edge head out of range");
    }
}

Digraph sample_dcm(std::shared_ptr<const DegreeSequence> seq, RngStream rng) {
    if (seq->model() != ModelKind::DCM) throw Error(ErrorCode::ModelMismatch, "sample_dcm on OCM");
    const auto in = seq->in_degrees();
    std::vector<Vertex> slots;
    slots.reserve(seq->m());
    for (std::size_t y = 0; y < in.size(); ++y) slots.insert(slots.end(), in[y], static_cast<Vertex>(y));
    for (std::size_t i = slots.size(); i > 1; --i) {
        std::swap(slots[i - 1], slots[rng.below(i)]);
    }
    const auto seed = rng.root_seed();
    const auto stream = rng.stream_index();
    return Digraph(std::move(seq), std::move(slots), seed, stream);
}

Digraph sample_ocm(std::shared_ptr<const DegreeSequence> seq, RngStream rng) {
    if (seq->model() != ModelKind::OCM) throw Error(ErrorCode::ModelMismatch, "sample_ocm on DCM");
    const std::size_t n = seq->n();
    std::vector<Vertex> heads;
    heads.reserve(seq->m());
    std::unordered_set<Vertex> chosen;
    for (std::size_t x = 0; x < n; ++x) {
        const std::uint32_t d = seq->out_degree(static_cast<Vertex>(x));
        const auto begin = heads.size();
        // Floyd's subset sampling: for j = n-d .. n-1 draw r in [0, j]; take r
        // unless already chosen, in which case take j.
        if (d <= 64) {
            for (std::size_t j = n - d; j < n; ++j) {
                auto r = static_cast<Vertex>(rng.below(j + 1));
                if (std::find(heads.begin() + static_cast<std::ptrdiff_t>(begin), heads.end(), r) !=
                    heads.end()) {
                    r = static_cast<Vertex>(j);
                }
                heads.push_back(r);
            }
        } else {
            chosen.clear();
            for (std::size_t j = n - d; j < n; ++j) {
                auto r = static_cast<Vertex>(rng.below(j + 1));
                if (!chosen.insert(r).second) {
                    r = static_cast<Vertex>(j);
                    chosen.insert(r);
                }
                heads.push_back(r);
            }
        }
        std::sort(heads.begin() + static_cast<std::ptrdiff_t>(begin), heads.end());
    }
    const auto seed = rng.root_seed();
    const auto stream = rng.stream_index();
    return Digraph(std::move(seq), std::move(heads), seed, stream);
}

Digraph sample_digraph(std::shared_ptr<const DegreeSequence> seq, RngStream rng) {
    return seq->model() == ModelKind::DCM ? sample_dcm(std::move(seq), rng)
                                          : sample_ocm(std::move(seq), rng);
}

bool is_simple(const Digraph& g) {
    std::vector<Vertex> row;
    for (Vertex x = 0; x < g.n(); ++x) {
        const auto edges = g.out_edges(x);
        row.assign(edges.begin(), edges.end());
        std::sort(row.begin(), row.end());
        if (std::binary_search(row.begin(), row.end(), x)) return false;
        if (std::adjacent_find(row.begin(), row.end()) != row.end()) return false;
    }
    return true;
}

SccResult strongly_connected_components(const Digraph& g) {
    constexpr auto kUnvisited = std::numeric_limits<std::uint32_t>::max();
    const std::size_t n = g.n();
    SccResult result;
    result.component.assign(n, kUnvisited);
    std::vector<std::uint32_t> index(n, kUnvisited);
    std::vector<std::uint32_t> low(n, 0);
    std::vector<char> on_stack(n, 0);
    std::vector<Vertex> stack;
    // (vertex, next edge position) frames replace recursion.
    std::vector<std::pair<Vertex, std::size_t>> frames;
    std::uint32_t counter = 0;

    for (Vertex root = 0; root < n; ++root) {
        if (index[root] != kUnvisited) continue;
        frames.emplace_back(root, 0);
        index[root] = low[root] = counter++;
        stack.push_back(root);
        on_stack[root] = 1;
        while (!frames.empty()) {
            auto& [v, pos] = frames.back();
            const auto edges = g.out_edges(v);
            if (pos < edges.size()) {
                const Vertex w = edges[pos++];
                if (index[w] == kUnvisited) {
                    index[w] = low[w] = counter++;
                    stack.push_back(w);
                    on_stack[w] = 1;
                    frames.emplace_back(w, 0);
                } else if (on_stack[w]) {
                    low[v] = std::min(low[v], index[w]);
                }
                continue;
            }
            const Vertex done = v;
            frames.pop_back();
            if (!frames.empty()) {
                const Vertex parent = frames.back().first;
                low[parent] = std::min(low[parent], low[done]);
            }
            if (low[done] == index[done]) {
                Vertex w;
                do {
                    w = stack.back();
                    stack.pop_back();
                    on_stack[w] = 0;
                    result.component[w] = result.count;
                } while (w != done);
                ++result.count;
            }
        }
    }

    std::vector<char> leaves(result.count, 0);
    for (Vertex x = 0; x < n; ++x) {
        for (Vertex y : g.out_edges(x)) {
            if (result.component[y] != result.component[x]) leaves[result.component[x]] = 1;
        }
    }
    result.closed_count = static_cast<std::uint32_t>(std::count(leaves.begin(), leaves.end(), 0));
    return result;
}

bool strongly_connected(const Digraph& g) { return strongly_connected_components(g).count == 1; }

std::string digraph_to_json(const Digraph& g) {
    nlohmann::json doc;
    doc["seed"] = g.seed();
    doc["stream"] = g.stream();
    doc["model"] = std::string(to_string(g.sequence().model()));
    auto& rows = doc["out_edges"] = nlohmann::json::array();
    for (Vertex x = 0; x < g.n(); ++x) {
        const auto edges = g.out_edges(x);
        rows.push_back(std::vector<Vertex>(edges.begin(), edges.end()));
    }
    return doc.dump();
}

Digraph digraph_from_json(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, e.what());
    }
    try {
        const auto model = parse_model(doc.at("model").get<std::string>());
        const auto rows = doc.at("out_edges").get<std::vector<std::vector<Vertex>>>();
        const std::size_t n = rows.size();
        std::vector<std::uint32_t> out(n);
        std::vector<std::uint32_t> in(n, 0);
        std::vector<Vertex> heads;
        for (std::size_t x = 0; x < n; ++x) {
            out[x] = static_cast<std::uint32_t>(rows[x].size());
            for (Vertex y : rows[x]) {
                if (y >= n) throw Error(ErrorCode::BadRange, "edge head out of range");
                ++in[y];
                heads.push_back(y);
            }
        }
        auto seq = std::make_shared<const DegreeSequence>(
            model == ModelKind::DCM ? validate_degrees(model, std::move(out), std::move(in))
                                    : validate_degrees(model, std::move(out)));
        const auto stream = doc.contains("stream") ? doc["stream"].get<std::uint64_t>() : 0;
        return Digraph(std::move(seq), std::move(heads), doc.at("seed").get<std::uint64_t>(), stream);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::Parse, e.what());
    }
}

}  // namespace mixlab
