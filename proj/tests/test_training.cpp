#include <gtest/gtest.h>

#include <fstream>

#include "support.hpp"
#include "xbarsim/errors.hpp"
#include "xbarsim/io.hpp"
#include "xbarsim/patch.hpp"
#include "xbarsim/training.hpp"

using namespace xbarsim;
using xbarsim::testing::scratch_dir;

namespace {

// Two Gaussian blobs in 2-D, well separated.
Dataset blobs(std::size_t per_class, std::uint64_t seed) {
    CounterRng rng(seed);
    Dataset d;
    d.name = "blobs";
    d.sample_shape = {2};
    d.num_classes = 2;
    for (std::size_t i = 0; i < per_class; ++i) {
        for (std::uint8_t c = 0; c < 2; ++c) {
            const double centre = c == 0 ? -2.0 : 2.0;
            d.images.emplace_back(Shape{2}, std::vector<double>{rng.normal(centre, 0.5), rng.normal(centre, 0.5)});
            d.labels.push_back(c);
        }
    }
    return d;
}

std::vector<char> bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace

TEST(Training, SeparableBlobsReachFullAccuracy) {
    const auto data = blobs(50, 3);
    TrainOptions opt;
    opt.architecture = "linear";
    opt.epochs = 200;
    opt.learning_rate = 0.5;
    TrainReport report;
    const auto net = train_fixture(data, opt, &report);
    EXPECT_EQ(evaluate(net, data).accuracy, 1.0);
    EXPECT_EQ(report.train_accuracy, 1.0);
    EXPECT_LT(report.loss.back(), report.loss.front());
}

TEST(Training, MlpLossDecreases) {
    const auto data = blobs(30, 4);
    TrainOptions opt;
    opt.architecture = "mlp";
    opt.hidden = 8;
    opt.epochs = 50;
    TrainReport report;
    train_fixture(data, opt, &report);
    ASSERT_EQ(report.loss.size(), 50u);
    EXPECT_LT(report.loss.back(), report.loss.front());
}

TEST(Training, ZeroLearningRateLeavesWeightsUnchanged) {
    const auto data = blobs(10, 5);
    TrainOptions opt;
    opt.architecture = "mlp";
    opt.hidden = 4;
    const auto init = make_architecture(opt, data.sample_shape, data.num_classes);
    const auto after = train(init, data, 20, 0.0);
    const auto x = data.images[0];
    EXPECT_EQ(forward(after, x), forward(init, x));
    ASSERT_EQ(after.layers.size(), init.layers.size());
    EXPECT_EQ(std::get<Linear>(after.layers[1]).weight, std::get<Linear>(init.layers[1]).weight);
}

TEST(Training, SameSeedGivesByteIdenticalContainers) {
    const auto data = blobs(20, 6);
    TrainOptions opt;
    opt.architecture = "mlp";
    opt.hidden = 6;
    opt.epochs = 30;
    const auto a = scratch_dir("train_a");
    const auto b = scratch_dir("train_b");
    write_network(a, train_fixture(data, opt));
    write_network(b, train_fixture(data, opt));
    for (const auto& entry : fs::directory_iterator(a)) {
        EXPECT_EQ(bytes(entry.path()), bytes(b / entry.path().filename())) << entry.path().filename();
    }
    opt.seed = 2;
    const auto c = scratch_dir("train_c");
    write_network(c, train_fixture(data, opt));
    EXPECT_NE(bytes(a / "1_weight"), bytes(c / "1_weight"));
}

TEST(Training, CnnArchitectureShapes) {
    TrainOptions opt;
    opt.architecture = "cnn";
    opt.channels = 4;
    const auto net = make_architecture(opt, {1, 8, 8}, 10);
    EXPECT_EQ(net.shapes().back(), (Shape{10}));
    EXPECT_TRUE(std::holds_alternative<Conv2d>(net.layers.front()));
}

TEST(Training, UnknownArchitectureIsAConfigError) {
    TrainOptions opt;
    opt.architecture = "transformer";
    EXPECT_THROW(make_architecture(opt, {2}, 2), ConfigError);
}

TEST(Training, DivergenceRaisesTrainingError) {
    // Labels that contradict the inputs keep the gradient alive; the huge
    // step then overflows the hidden layer.
    auto data = blobs(10, 7);
    for (std::size_t i = 0; i < data.size(); ++i) {
        data.labels[i] = static_cast<std::uint8_t>((i / 2) % 2);
    }
    TrainOptions opt;
    opt.architecture = "mlp";
    opt.hidden = 4;
    opt.epochs = 5;
    opt.learning_rate = 1e300;
    EXPECT_THROW(train_fixture(data, opt), TrainingError);
}
