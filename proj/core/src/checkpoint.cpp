// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0

#include "lenred/checkpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace lenred {

namespace {

using nlohmann::json;

std::string hex_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%a", v);
    return buf;
}

void write_param(std::ostream& os, const std::string& name, const ad::Value& value) {
    os << "param " << name << " " << value->shape.size();
    for (const auto d : value->shape) os << " " << d;
    os << "\n";
    const std::size_t rows = value->shape.empty() ? 1 : value->shape[0];
    const std::size_t cols = value->size() / rows;
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            if (j) os << " ";
            os << hex_double(value->data[i * cols + j]);
        }
        os << "\n";
    }
}

struct Reader {
    std::ifstream in;
    std::string path;

    explicit Reader(const std::string& p) : in(p), path(p) {
        if (!in) throw MissingArtifact("checkpoint not found: " + p);
    }

    std::string line() {
        std::string s;
        if (!std::getline(in, s)) throw ConfigError("checkpoint truncated: " + path);
        return s;
    }

    void expect(const std::string& want) {
        const std::string got = line();
        if (got != want) {
            throw ConfigError("checkpoint " + path + ": expected '" + want + "', got '" + got + "'");
        }
    }
};

void read_params_into(Reader& r, ParamSet& params) {
    std::size_t seen = 0;
    while (true) {
        const std::string header = r.line();
        if (header == "end") break;
        std::istringstream hs(header);
        std::string tag, name;
        std::size_t rank = 0;
        hs >> tag >> name >> rank;
        if (tag != "param" || hs.fail()) {
            throw ConfigError("checkpoint " + r.path + ": bad param header '" + header + "'");
        }
        std::vector<std::size_t> shape(rank);
        for (auto& d : shape) hs >> d;
        const ad::Value value = params.find(name);
        if (value->shape != shape) {
            throw ConfigError("checkpoint " + r.path + ": shape mismatch for " + name);
        }
        const std::size_t rows = shape.empty() ? 1 : shape[0];
        const std::size_t cols = value->size() / rows;
        for (std::size_t i = 0; i < rows; ++i) {
            std::istringstream ls(r.line());
            std::string tok;
            for (std::size_t j = 0; j < cols; ++j) {
                if (!(ls >> tok)) {
                    throw ConfigError("checkpoint " + r.path + ": short row in " + name);
                }
                value->data[i * cols + j] = std::strtod(tok.c_str(), nullptr);
            }
        }
        ++seen;
    }
    if (seen != params.items().size()) {
        throw ConfigError("checkpoint " + r.path + ": expected " +
                          std::to_string(params.items().size()) + " params, found " +
                          std::to_string(seen));
    }
}

json encoder_config_json(const EncoderConfig& c) {
    return json{{"num_layers", c.num_layers},   {"hidden_dim", c.hidden_dim},
                {"num_heads", c.num_heads},     {"ffn_dim", c.ffn_dim},
                {"vocab_size", c.vocab_size},   {"max_len", c.max_len},
                {"num_classes", c.num_classes}};
}

EncoderConfig encoder_config_from_json(const json& j) {
    EncoderConfig c;
    c.num_layers = j.at("num_layers").get<std::size_t>();
    c.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    c.num_heads = j.at("num_heads").get<std::size_t>();
    c.ffn_dim = j.at("ffn_dim").get<std::size_t>();
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.max_len = j.at("max_len").get<std::size_t>();
    c.num_classes = j.at("num_classes").get<std::size_t>();
    return c;
}

void write_header(std::ostream& os, const std::string& kind, const json& config,
                  const Vocabulary& vocab) {
    os << "lenred-checkpoint v1\n";
    os << "kind " << kind << "\n";
    os << "config " << config.dump() << "\n";
    os << "vocab " << vocab.size() << "\n";
    for (const auto& w : vocab.words()) os << w << "\n";
}

struct Header {
    std::string kind;
    json config;
    Vocabulary vocab;
};

Header read_header(Reader& r) {
    r.expect("lenred-checkpoint v1");
    Header h;
    {
        std::istringstream ss(r.line());
        std::string tag;
        ss >> tag >> h.kind;
        if (tag != "kind" || (h.kind != "backbone" && h.kind != "adaptive")) {
            throw ConfigError("checkpoint " + r.path + ": bad kind line");
        }
    }
    {
        const std::string cl = r.line();
        if (cl.rfind("config ", 0) != 0) throw ConfigError("checkpoint " + r.path + ": bad config line");
        h.config = json::parse(cl.substr(7));
    }
    {
        std::istringstream ss(r.line());
        std::string tag;
        std::size_t count = 0;
        ss >> tag >> count;
        if (tag != "vocab") throw ConfigError("checkpoint " + r.path + ": bad vocab line");
        std::vector<std::string> words(count);
        for (auto& w : words) w = r.line();
        h.vocab = Vocabulary::from_words(std::move(words));
    }
    return h;
}

}  // namespace

void save_backbone_checkpoint(const std::string& path, const EncoderModel& model) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write checkpoint: " + path);
    write_header(os, "backbone", encoder_config_json(model.config), model.vocab);
    for (const auto& [name, value] : model.params.items()) write_param(os, name, value);
    os << "end\n";
}

EncoderModel load_backbone_checkpoint(const std::string& path) {
    Reader r(path);
    Header h = read_header(r);
    if (h.kind != "backbone") {
        throw ConfigError("checkpoint " + path + ": expected backbone, found " + h.kind);
    }
    Rng rng(0);
    EncoderModel model = EncoderModel::init(encoder_config_from_json(h.config), std::move(h.vocab), rng);
    read_params_into(r, model.params);
    return model;
}

void save_adaptive_checkpoint(const std::string& path, const AdaptiveModel& model) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write checkpoint: " + path);
    json config = encoder_config_json(model.encoder.config);
    config["cp_hidden_dim"] = model.cp_hidden_dim;
    write_header(os, "adaptive", config, model.encoder.vocab);
    for (const auto& [name, value] : model.main_params.items()) write_param(os, name, value);
    for (const auto& [name, value] : model.speedup_params.items()) write_param(os, name, value);
    os << "end\n";
}

AdaptiveModel load_adaptive_checkpoint(const std::string& path) {
    Reader r(path);
    Header h = read_header(r);
    if (h.kind != "adaptive") {
        throw ConfigError("checkpoint " + path + ": expected adaptive, found " + h.kind);
    }
    Rng rng(0);
    EncoderModel encoder =
        EncoderModel::init(encoder_config_from_json(h.config), std::move(h.vocab), rng);
    const auto cp_hidden = h.config.at("cp_hidden_dim").get<std::size_t>();
    // threshold/amplify init values are placeholders; the file overwrites them
    AdaptiveModel model = AdaptiveModel::init(std::move(encoder), cp_hidden, 0.5, 1.01, rng);
    ParamSet all;
    all.extend(model.main_params);
    all.extend(model.speedup_params);
    read_params_into(r, all);
    return model;
}

EncoderModel load_encoder_from_checkpoint(const std::string& path) {
    std::string kind;
    {
        Reader r(path);
        kind = read_header(r).kind;
    }
    if (kind == "backbone") return load_backbone_checkpoint(path);
    return load_adaptive_checkpoint(path).encoder;
}

std::uint64_t file_content_hash(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingArtifact("artifact not found: " + path);
    Fnv1a h;
    char buf[4096];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
        h.update(buf, static_cast<std::size_t>(in.gcount()));
        if (in.eof()) break;
    }
    return h.digest();
}

}  // namespace lenred
