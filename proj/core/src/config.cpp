// Copyright (c) 2026 The lenred Authors
// SPDX-License-Identifier: Apache-2.0

#include "lenred/config.hpp"

#include <fstream>
#include <set>

#include "json.hpp"

namespace lenred {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
    for (const auto& [key, value] : j.items()) {
        if (!allowed.count(key)) {
            throw ConfigError("config: unknown key '" + key + "' in " + where);
        }
    }
}

}  // namespace

RunConfig RunConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config file not found: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config " + path + ": " + e.what());
    }

    RunConfig cfg;
    reject_unknown_keys(j, {"seed", "out_dir", "data", "model", "synthetic", "finetune",
                            "adaptive", "flops"},
                        "top level");
    cfg.seed = j.value("seed", cfg.seed);
    cfg.out_dir = j.value("out_dir", cfg.out_dir);

    if (j.contains("data")) {
        reject_unknown_keys(j["data"], {"train", "dev", "test"}, "data");
        cfg.data.train = j["data"].value("train", "");
        cfg.data.dev = j["data"].value("dev", "");
        cfg.data.test = j["data"].value("test", "");
    }

    if (j.contains("model")) {
        const auto& m = j["model"];
        reject_unknown_keys(m,
                            {"num_layers", "hidden_dim", "num_heads", "ffn_dim", "max_len",
                             "num_classes", "cp_hidden_dim"},
                            "model");
        cfg.model.num_layers = m.value("num_layers", cfg.model.num_layers);
        cfg.model.hidden_dim = m.value("hidden_dim", cfg.model.hidden_dim);
        cfg.model.num_heads = m.value("num_heads", cfg.model.num_heads);
        cfg.model.ffn_dim = m.value("ffn_dim", cfg.model.ffn_dim);
        cfg.model.max_len = m.value("max_len", cfg.model.max_len);
        cfg.model.num_classes = m.value("num_classes", cfg.model.num_classes);
        cfg.cp_hidden_dim = m.value("cp_hidden_dim", cfg.cp_hidden_dim);
    }

    if (j.contains("synthetic")) {
        const auto& s = j["synthetic"];
        reject_unknown_keys(s,
                            {"task", "train_size", "dev_size", "test_size", "seq_words",
                             "num_classes", "filler_vocab"},
                            "synthetic");
        SyntheticSpec spec;
        const std::string task = s.value("task", "keyword-topic");
        if (task == "keyword-topic") {
            spec.task = SyntheticTask::kKeywordTopic;
        } else if (task == "sentiment-lexicon") {
            spec.task = SyntheticTask::kSentimentLexicon;
        } else {
            throw ConfigError("config: synthetic.task must be keyword-topic or sentiment-lexicon");
        }
        spec.train_size = s.value("train_size", spec.train_size);
        spec.dev_size = s.value("dev_size", spec.dev_size);
        spec.test_size = s.value("test_size", spec.test_size);
        spec.seq_words = s.value("seq_words", spec.seq_words);
        spec.num_classes = s.value("num_classes", spec.num_classes);
        spec.filler_vocab = s.value("filler_vocab", spec.filler_vocab);
        cfg.synthetic = spec;
    }

    if (j.contains("finetune")) {
        const auto& f = j["finetune"];
        reject_unknown_keys(f, {"epochs", "batch_size", "learning_rate", "checkpoint_pool"},
                            "finetune");
        cfg.finetune.epochs = f.value("epochs", cfg.finetune.epochs);
        cfg.finetune.batch_size = f.value("batch_size", cfg.finetune.batch_size);
        cfg.finetune.learning_rate = f.value("learning_rate", cfg.finetune.learning_rate);
        cfg.finetune.checkpoint_pool = f.value("checkpoint_pool", cfg.finetune.checkpoint_pool);
    }

    if (j.contains("adaptive")) {
        const auto& a = j["adaptive"];
        reject_unknown_keys(a,
                            {"epochs", "batch_size", "learning_rate", "speedup_learning_rate",
                             "cp_loss_weight", "length_loss_weight", "removal_start",
                             "removal_growth", "leak_slope", "threshold_init", "amplify_init"},
                            "adaptive");
        cfg.adaptive.epochs = a.value("epochs", cfg.adaptive.epochs);
        cfg.adaptive.batch_size = a.value("batch_size", cfg.adaptive.batch_size);
        cfg.adaptive.learning_rate = a.value("learning_rate", cfg.adaptive.learning_rate);
        cfg.adaptive.speedup_learning_rate =
            a.value("speedup_learning_rate", cfg.adaptive.speedup_learning_rate);
        cfg.adaptive.cp_loss_weight = a.value("cp_loss_weight", cfg.adaptive.cp_loss_weight);
        cfg.adaptive.length_loss_weight =
            a.value("length_loss_weight", cfg.adaptive.length_loss_weight);
        cfg.adaptive.schedule.start = a.value("removal_start", cfg.adaptive.schedule.start);
        cfg.adaptive.schedule.growth = a.value("removal_growth", cfg.adaptive.schedule.growth);
        cfg.adaptive.schedule.leak_slope = a.value("leak_slope", cfg.adaptive.schedule.leak_slope);
        cfg.threshold_init = a.value("threshold_init", cfg.threshold_init);
        cfg.amplify_init = a.value("amplify_init", cfg.amplify_init);
    }

    if (j.contains("flops")) {
        const auto& f = j["flops"];
        reject_unknown_keys(f, {"include_cp", "static_retention"}, "flops");
        cfg.flops.include_cp = f.value("include_cp", cfg.flops.include_cp);
        if (f.contains("static_retention")) {
            cfg.flops.static_retention = f["static_retention"].get<std::vector<std::size_t>>();
        }
    }

    cfg.validate();
    return cfg;
}

void RunConfig::validate() const {
    model.validate();
    if (cp_hidden_dim < 1) throw ConfigError("config: cp_hidden_dim must be >= 1");
    if (finetune.epochs < 1) throw ConfigError("config: finetune.epochs must be >= 1");
    if (finetune.batch_size < 1) throw ConfigError("config: finetune.batch_size must be >= 1");
    if (finetune.checkpoint_pool < 1) {
        throw ConfigError("config: finetune.checkpoint_pool must be >= 1");
    }
    if (!(finetune.learning_rate > 0.0)) {
        throw ConfigError("config: finetune.learning_rate must be > 0");
    }
    adaptive.validate();  // loss weights >= 0; removal: start > 0, growth >= 1, 0 < leak < 0.1
    if (!(threshold_init > 0.0) || threshold_init >= 1.0) {
        throw ConfigError("config: adaptive.threshold_init must lie in (0,1)");
    }
    if (!(amplify_init > 1.0)) {
        throw ConfigError(
            "config: adaptive.amplify_init must be > 1 (the 1 + softplus parametrization keeps "
            "the amplification above 1)");
    }
    if (synthetic) synthetic->validate();
    for (const std::size_t c : flops.static_retention) {
        if (c < 1) throw ConfigError("config: flops.static_retention entries must be >= 1");
    }
}

}  // namespace lenred
