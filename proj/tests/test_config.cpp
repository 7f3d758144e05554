#include <filesystem>

#include "doctest.h"
#include "ltc/config.hpp"

using namespace ltc;

TEST_CASE("settings parse and round trip") {
    RunConfig cfg;
    apply_config_text(cfg, R"(
# small run
mode = htc
gamma = 0.5   # trailing comment
epsilon = 3
code_length = 64
decay_epochs = 5, 9
code_activation = tanh
ste = passthrough
feature_widths = 32,16
data = longtail
imbalance_ratio = 10
out_dir = /tmp/run a
)");
    CHECK(cfg.train.mode == TrainMode::htc);
    CHECK(cfg.train.hp.gamma == 0.5);
    CHECK(cfg.train.hp.epsilon == 3.0);
    CHECK(cfg.train.hp.decay_epochs == std::vector<std::size_t>{5, 9});
    CHECK(cfg.train.hp.code_activation == CodeActivation::tanh_scaled);
    CHECK(cfg.train.hp.ste == SteMode::passthrough);
    CHECK(cfg.train.feature_widths == std::vector<std::size_t>{32, 16});
    CHECK(cfg.data.kind == DataKind::longtail);
    CHECK(cfg.train.out_dir == "/tmp/run a");

    const std::string dumped = dump_config(cfg);
    RunConfig again;
    apply_config_text(again, dumped);
    CHECK(dump_config(again) == dumped);

    RunConfig defaults;
    CHECK(dump_config(defaults).find("epsilon = auto\n") != std::string::npos);
    CHECK(dump_config(defaults).find("decay_epochs = 40,70\n") != std::string::npos);
}

TEST_CASE("bad settings are rejected") {
    RunConfig cfg;
    CHECK_THROWS_AS(apply_setting(cfg, "learning_rate", "0.1"), ConfigError);
    CHECK_THROWS_AS(apply_setting(cfg, "gamma", "abc"), ConfigError);
    CHECK_THROWS_AS(apply_setting(cfg, "epochs", "-3"), ConfigError);
    CHECK_THROWS_AS(apply_setting(cfg, "mode", "fancy"), ConfigError);
    CHECK_THROWS_AS(apply_setting(cfg, "decay_codes", "maybe"), ConfigError);
    CHECK_THROWS_AS(apply_config_text(cfg, "gamma 1\n"), ConfigError);
    CHECK_THROWS_AS(apply_config_file(cfg, "/nonexistent/ltc.cfg"), ConfigError);
    try {
        apply_config_text(cfg, "epochs = 2\nbogus = 1\n");
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("bogus") != std::string::npos);
    }
}

TEST_CASE("datasets from a run config") {
    RunConfig cfg;
    cfg.data.blobs.classes = 4;
    cfg.data.blobs.groups = 2;
    cfg.data.blobs.dim = 6;
    cfg.data.blobs.per_class = 40;
    cfg.data.test_per_class = 10;
    DataPair d = build_datasets(cfg);
    CHECK(d.train.size() == 160);
    CHECK(d.test.size() == 40);
    CHECK_FALSE(cfg.train.imbalanced);
    // Same seed, same data.
    DataPair again = build_datasets(cfg);
    CHECK(again.train.x == d.train.x);

    cfg.data.kind = DataKind::longtail;
    cfg.data.imbalance_ratio = 10.0;
    d = build_datasets(cfg);
    CHECK(d.train.class_counts == std::vector<std::size_t>{40, 19, 9, 4});
    CHECK(d.test.class_counts == std::vector<std::size_t>{10, 10, 10, 10});
    CHECK(cfg.train.imbalanced);

    cfg.data.imbalance_ratio = 100.0;
    CHECK_THROWS_AS(build_datasets(cfg), ConfigError);

    cfg.data.kind = DataKind::csv;
    CHECK_THROWS_AS(build_datasets(cfg), ConfigError);
}
