// Bit-exact persistence. File formats are documented in docs/formats.md:
//   * dataset files: 28-byte header (magic "GSLD", u32 version, u32 samples,
//     u32 n, u32 p, u8 similarity kind, 7 reserved bytes), per-sample payload
//     of little-endian f64 (A row-major, X, S), then a u64-length-prefixed
//     JSON metadata trailer
//   * model parameters: JSON with raw (pre-softplus) values as 17-significant-
//     digit decimal strings so round trips are bitwise
//   * edge lists: `i j [weight]` per line, 0-based, `#` comments
//   * intermediate dumps: per-layer CSV (full precision) and binary P5 PGM
#pragma once

#include <bit>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "synth.hpp"
#include "unroll.hpp"

namespace glearn {

struct io_error : error {
    using error::error;
};
struct bad_magic_error : io_error {
    using io_error::io_error;
};
struct version_error : io_error {
    using io_error::io_error;
};
struct truncation_error : io_error {
    using io_error::io_error;
};
struct length_error : io_error {
    using io_error::io_error;
};
struct schema_error : io_error {
    using io_error::io_error;
};
struct parse_error : io_error {
    using io_error::io_error;
};

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "file formats assume a little-endian host");

inline void put_u32(std::string& out, std::uint32_t v) {
    out.append(reinterpret_cast<const char*>(&v), 4);
}
inline void put_u64(std::string& out, std::uint64_t v) {
    out.append(reinterpret_cast<const char*>(&v), 8);
}
inline void put_f64(std::string& out, const Matrix& m) {
    // row-major on disk
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double v = m(i, j);
            out.append(reinterpret_cast<const char*>(&v), 8);
        }
}

class Cursor {
  public:
    Cursor(const std::string& data, const std::string& what)
        : data_(data), what_(what) {}

    std::uint32_t u32() { return read_scalar<std::uint32_t>(); }
    std::uint64_t u64() { return read_scalar<std::uint64_t>(); }
    std::uint8_t u8() { return read_scalar<std::uint8_t>(); }

    Matrix f64_matrix(int rows, int cols) {
        need(static_cast<std::size_t>(rows) * cols * 8);
        Matrix m(rows, cols);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) {
                double v;
                std::memcpy(&v, data_.data() + pos_, 8);
                pos_ += 8;
                m(i, j) = v;
            }
        return m;
    }

    std::string bytes(std::size_t count) {
        need(count);
        std::string s = data_.substr(pos_, count);
        pos_ += count;
        return s;
    }

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }

  private:
    template <typename T>
    T read_scalar() {
        need(sizeof(T));
        T v;
        std::memcpy(&v, data_.data() + pos_, sizeof(T));
        pos_ += sizeof(T);
        return v;
    }

    void need(std::size_t count) {
        if (pos_ + count > data_.size())
            throw truncation_error(what_ + ": truncated, need " +
                                   std::to_string(pos_ + count) + " bytes, have " +
                                   std::to_string(data_.size()));
    }

    const std::string& data_;
    std::string what_;
    std::size_t pos_ = 0;
};

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& data) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw io_error("cannot open " + path + " for writing");
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw io_error("write failed: " + path);
}

/// 17 significant digits round-trips every finite double.
inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// dataset files

inline nlohmann::json spec_to_json(const GraphEnsembleSpec& g) {
    nlohmann::json j;
    j["ensemble"] = to_string(g.ensemble);
    j["n"] = g.n;
    j["er_p"] = g.er_p;
    j["ba_m"] = g.ba_m;
    j["ws_k"] = g.ws_k;
    j["ws_p"] = g.ws_p;
    j["sbm_sizes"] = g.sbm_sizes;
    std::vector<std::vector<double>> probs;
    for (Eigen::Index i = 0; i < g.sbm_probs.rows(); ++i) {
        std::vector<double> row;
        for (Eigen::Index c = 0; c < g.sbm_probs.cols(); ++c) row.push_back(g.sbm_probs(i, c));
        probs.push_back(std::move(row));
    }
    j["sbm_probs"] = probs;
    j["grid_rows"] = g.grid_rows;
    j["grid_cols"] = g.grid_cols;
    j["seed"] = g.seed;
    return j;
}

inline GraphEnsembleSpec spec_graph_from_json(const nlohmann::json& j) {
    GraphEnsembleSpec g;
    g.ensemble = graph_ensemble_from_string(j.at("ensemble").get<std::string>());
    g.n = j.at("n").get<int>();
    g.er_p = j.at("er_p").get<double>();
    g.ba_m = j.at("ba_m").get<int>();
    g.ws_k = j.at("ws_k").get<int>();
    g.ws_p = j.at("ws_p").get<double>();
    g.sbm_sizes = j.at("sbm_sizes").get<std::vector<int>>();
    auto probs = j.at("sbm_probs").get<std::vector<std::vector<double>>>();
    if (!probs.empty()) {
        g.sbm_probs = Matrix(probs.size(), probs[0].size());
        for (std::size_t i = 0; i < probs.size(); ++i)
            for (std::size_t c = 0; c < probs[i].size(); ++c)
                g.sbm_probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) =
                    probs[i][c];
    }
    g.grid_rows = j.at("grid_rows").get<int>();
    g.grid_cols = j.at("grid_cols").get<int>();
    g.seed = j.at("seed").get<std::uint64_t>();
    return g;
}

inline nlohmann::json spec_to_json(const SignalModelSpec& s) {
    nlohmann::json j;
    j["model"] = to_string(s.model);
    j["p_signals"] = s.p_signals;
    j["eps"] = s.eps;
    j["diffuse_alpha"] =
        std::vector<double>(s.diffuse_alpha.data(), s.diffuse_alpha.data() + s.diffuse_alpha.size());
    j["noise_sigma"] = s.noise_sigma;
    j["eps_pd"] = s.eps_pd;
    j["seed"] = s.seed;
    return j;
}

inline SignalModelSpec spec_signal_from_json(const nlohmann::json& j) {
    SignalModelSpec s;
    s.model = signal_model_from_string(j.at("model").get<std::string>());
    s.p_signals = j.at("p_signals").get<int>();
    s.eps = j.at("eps").get<double>();
    auto alpha = j.at("diffuse_alpha").get<std::vector<double>>();
    s.diffuse_alpha = Eigen::Map<const Vector>(alpha.data(), static_cast<Eigen::Index>(alpha.size()));
    s.noise_sigma = j.at("noise_sigma").get<double>();
    s.eps_pd = j.at("eps_pd").get<double>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
}

inline constexpr std::uint32_t kDatasetVersion = 1;

inline std::string serialize_dataset(const Dataset& ds) {
    std::string out;
    out += "GSLD";
    const int n = ds.samples.empty() ? 0 : ds.samples[0].a.n;
    const int p = ds.samples.empty() ? 0 : ds.samples[0].x.p;
    detail::put_u32(out, kDatasetVersion);
    detail::put_u32(out, static_cast<std::uint32_t>(ds.samples.size()));
    detail::put_u32(out, static_cast<std::uint32_t>(n));
    detail::put_u32(out, static_cast<std::uint32_t>(p));
    out.push_back(static_cast<char>(ds.simkind));
    out.append(7, '\0');
    for (const Sample& s : ds.samples) {
        detail::put_f64(out, s.a.w);
        detail::put_f64(out, s.x.x);
        detail::put_f64(out, s.s.s);
    }
    nlohmann::json meta;
    meta["graph_spec"] = spec_to_json(ds.gspec);
    meta["signal_spec"] = spec_to_json(ds.sspec);
    meta["similarity"] = to_string(ds.simkind);
    meta["splits"] = {{"train", ds.n_train}, {"val", ds.n_val}, {"test", ds.n_test}};
    meta["master_seed"] = ds.master_seed;
    const std::string mjson = meta.dump();
    detail::put_u64(out, mjson.size());
    out += mjson;
    return out;
}

inline void write_dataset(const Dataset& ds, const std::string& path) {
    detail::write_file(path, serialize_dataset(ds));
}

inline Dataset parse_dataset(const std::string& data, const std::string& what) {
    detail::Cursor cur(data, what);
    if (cur.bytes(4) != "GSLD") throw bad_magic_error(what + ": bad magic");
    const std::uint32_t version = cur.u32();
    if (version != kDatasetVersion)
        throw version_error(what + ": unsupported format version " + std::to_string(version));
    const std::uint32_t count = cur.u32();
    const int n = static_cast<int>(cur.u32());
    const int p = static_cast<int>(cur.u32());
    const std::uint8_t simkind = cur.u8();
    cur.bytes(7);  // reserved
    if (simkind > 2) throw schema_error(what + ": invalid similarity kind byte");

    Dataset ds;
    ds.simkind = static_cast<SimilarityKind>(simkind);
    ds.samples.reserve(count);
    for (std::uint32_t i = 0; i < count; ++i) {
        Matrix a = cur.f64_matrix(n, n);
        Matrix x = cur.f64_matrix(n, p);
        Matrix s = cur.f64_matrix(n, n);
        ds.samples.push_back(Sample{AdjacencyMatrix{n, std::move(a)},
                                    SignalMatrix{n, p, std::move(x)},
                                    SimilarityMatrix{n, std::move(s), ds.simkind}});
    }
    const std::uint64_t mlen = cur.u64();
    if (cur.remaining() != mlen)
        throw length_error(what + ": trailer length mismatch, expected " +
                           std::to_string(mlen) + " bytes, have " +
                           std::to_string(cur.remaining()));
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(cur.bytes(mlen));
    } catch (const nlohmann::json::exception& e) {
        throw schema_error(what + ": metadata parse failure: " + e.what());
    }
    try {
        ds.gspec = spec_graph_from_json(meta.at("graph_spec"));
        ds.sspec = spec_signal_from_json(meta.at("signal_spec"));
        ds.n_train = meta.at("splits").at("train").get<int>();
        ds.n_val = meta.at("splits").at("val").get<int>();
        ds.n_test = meta.at("splits").at("test").get<int>();
        ds.master_seed = meta.at("master_seed").get<std::uint64_t>();
    } catch (const nlohmann::json::exception& e) {
        throw schema_error(what + ": metadata schema failure: " + e.what());
    }
    if (ds.n_train + ds.n_val + ds.n_test != static_cast<int>(count))
        throw schema_error(what + ": split sizes do not sum to sample count");
    return ds;
}

inline Dataset read_dataset(const std::string& path) {
    return parse_dataset(detail::read_file(path), path);
}

// ---------------------------------------------------------------------------
// edge lists

inline AdjacencyMatrix import_edge_list(const std::string& path, int n_hint = -1) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    struct Edge {
        int i, j;
        double w;
    };
    std::vector<Edge> edges;
    int max_index = -1;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        std::istringstream ls(line);
        long i, j;
        if (!(ls >> i)) continue;  // blank line
        double w = 1.0;
        if (!(ls >> j))
            throw parse_error(path + ":" + std::to_string(lineno) + ": expected `i j [weight]`");
        std::string tail;
        if (ls >> w) {
            if (ls >> tail)
                throw parse_error(path + ":" + std::to_string(lineno) + ": trailing tokens");
        } else {
            ls.clear();
            if (ls >> tail)
                throw parse_error(path + ":" + std::to_string(lineno) + ": bad weight");
            w = 1.0;
        }
        if (i < 0 || j < 0)
            throw parse_error(path + ":" + std::to_string(lineno) + ": negative node index");
        if (i == j)
            throw parse_error(path + ":" + std::to_string(lineno) + ": self-loop");
        if (w < 0.0)
            throw parse_error(path + ":" + std::to_string(lineno) + ": negative weight");
        if (n_hint >= 0 && (i >= n_hint || j >= n_hint))
            throw parse_error(path + ":" + std::to_string(lineno) + ": node index >= n");
        max_index = std::max(max_index, static_cast<int>(std::max(i, j)));
        edges.push_back(Edge{static_cast<int>(i), static_cast<int>(j), w});
    }
    const int n = n_hint >= 0 ? n_hint : max_index + 1;
    if (n < 1) throw parse_error(path + ": no edges and no node count given");
    Matrix m = Matrix::Zero(n, n);
    for (const Edge& e : edges) {
        m(e.i, e.j) = e.w;  // last weight wins
        m(e.j, e.i) = e.w;
    }
    return AdjacencyMatrix{n, std::move(m)};
}

// ---------------------------------------------------------------------------
// model parameter files

inline constexpr int kModelVersion = 1;

inline void save_model(const UnrollingModel& model, const std::string& path) {
    nlohmann::json j;
    j["format_version"] = kModelVersion;
    j["method"] = to_string(model.method);
    j["depth"] = model.depth;
    j["poly_order"] = model.poly_order;
    j["tie_layers"] = model.tie_layers;
    std::vector<std::vector<std::string>> layers;
    for (const Vector& r : model.raw) {
        std::vector<std::string> row;
        for (Eigen::Index k = 0; k < r.size(); ++k) row.push_back(detail::format_double(r[k]));
        layers.push_back(std::move(row));
    }
    j["layers"] = layers;
    detail::write_file(path, j.dump(2) + "\n");
}

inline UnrollingModel load_model(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(detail::read_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw schema_error(path + ": parse failure: " + e.what());
    }
    UnrollingModel m;
    try {
        if (j.at("format_version").get<int>() != kModelVersion)
            throw version_error(path + ": unsupported model format version");
        m.method = method_from_string(j.at("method").get<std::string>());
        m.depth = j.at("depth").get<int>();
        m.poly_order = j.at("poly_order").get<int>();
        m.tie_layers = j.at("tie_layers").get<bool>();
        auto layers = j.at("layers").get<std::vector<std::vector<std::string>>>();
        for (const auto& row : layers) {
            Vector r(static_cast<Eigen::Index>(row.size()));
            for (std::size_t k = 0; k < row.size(); ++k) r[static_cast<Eigen::Index>(k)] = std::stod(row[k]);
            m.raw.push_back(std::move(r));
        }
    } catch (const nlohmann::json::exception& e) {
        throw schema_error(path + ": schema failure: " + e.what());
    }
    if (m.depth < 1) throw schema_error(path + ": depth must be >= 1");
    if (static_cast<int>(m.raw.size()) != m.stored_layers())
        throw schema_error(path + ": layer count inconsistent with depth");
    for (const Vector& r : m.raw)
        if (r.size() != m.layer_arity())
            throw schema_error(path + ": layer parameter arity mismatch");
    return m;
}

inline UnrollingModel load_model(const std::string& path, Method expected) {
    UnrollingModel m = load_model(path);
    if (m.method != expected)
        throw schema_error(path + ": model method is " + std::string(to_string(m.method)) +
                           ", expected " + to_string(expected));
    return m;
}

// ---------------------------------------------------------------------------
// dump emitters

inline void write_matrix_csv(const Matrix& m, const std::string& path) {
    std::string out;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            if (j) out += ',';
            out += detail::format_double(m(i, j));
        }
        out += '\n';
    }
    detail::write_file(path, out);
}

inline Matrix read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) return Matrix(0, 0);
    Matrix m(rows.size(), rows[0].size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size()) throw parse_error(path + ": ragged csv");
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

/// Binary P5 PGM, min-max scaled per file; a constant matrix maps to all 0.
inline void write_matrix_pgm(const Matrix& m, const std::string& path) {
    const double lo = m.minCoeff(), hi = m.maxCoeff();
    std::string out = "P5\n" + std::to_string(m.cols()) + " " + std::to_string(m.rows()) +
                      "\n255\n";
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            const double scaled = hi > lo ? (m(i, j) - lo) / (hi - lo) * 255.0 : 0.0;
            out.push_back(static_cast<char>(static_cast<unsigned char>(scaled + 0.5)));
        }
    detail::write_file(path, out);
}

/// Per-state adjacency-estimate dumps: layer_{i:03}.csv and layer_{i:03}.pgm.
inline std::vector<std::string> dump_intermediates(const ForwardTrace& trace,
                                                   const std::string& dir) {
    std::filesystem::create_directories(dir);
    std::vector<std::string> files;
    for (std::size_t i = 0; i < trace.states.size(); ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "layer_%03zu", i);
        const Matrix m = state_estimate(trace.states[i]).w;
        const std::string csv = dir + "/" + name + ".csv";
        const std::string pgm = dir + "/" + name + ".pgm";
        write_matrix_csv(m, csv);
        write_matrix_pgm(m, pgm);
        files.push_back(csv);
        files.push_back(pgm);
    }
    return files;
}

}  // namespace glearn
