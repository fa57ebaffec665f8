#include <gtest/gtest.h>

#include <fstream>

#include "support.hpp"
#include "xbarsim/errors.hpp"
#include "xbarsim/io.hpp"
#include "xbarsim/training.hpp"

using namespace xbarsim;
using xbarsim::testing::random_vector;
using xbarsim::testing::scratch_dir;
using xbarsim::testing::source_path;

namespace {

std::vector<char> bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

NetworkSpec every_layer_kind() {
    NetworkSpec net;
    net.input_shape = {2, 6, 6};
    net.num_classes = 3;
    Conv2d c;
    c.in_channels = 2;
    c.out_channels = 4;
    c.kernel = 3;
    c.padding = 1;
    c.weight = random_vector(4 * 2 * 9, 1, -1, 1);
    c.bias = random_vector(4, 2, -1, 1);
    BatchNorm bn{random_vector(4, 3), random_vector(4, 4), random_vector(4, 5), random_vector(4, 6, 0.5, 1.5), 1e-3};
    Linear l;
    l.in_features = 36;
    l.out_features = 3;
    l.weight = xbarsim::testing::random_matrix(3, 36, 7);
    l.bias = random_vector(3, 8);
    net.layers = {c, bn, Relu{}, MaxPool{2, 2}, Dropout{0.25}, Flatten{}, l};
    net.metadata["note"] = "round trip";
    round_to_f32(net);
    return net;
}

}  // namespace

TEST(RawF32, RoundTripsFloatValuesExactly) {
    const auto dir = scratch_dir("raw");
    std::vector<double> v = {0.0, -1.5, 3.25, static_cast<float>(1e-30), static_cast<float>(0.1)};
    write_raw_f32(dir / "t", v);
    EXPECT_EQ(read_raw_f32(dir / "t", v.size()), v);
    EXPECT_EQ(fs::file_size(dir / "t"), v.size() * 4);
    EXPECT_THROW(read_raw_f32(dir / "t", v.size() + 1), IoError);
    EXPECT_THROW(read_raw_f32(dir / "missing", 1), IoError);
}

TEST(WeightContainer, RoundTripIsBitExact) {
    const auto dir = scratch_dir("weights_a");
    const auto net = every_layer_kind();
    write_network(dir, net);
    const auto back = read_network(dir);
    EXPECT_EQ(back.input_shape, net.input_shape);
    EXPECT_EQ(back.num_classes, net.num_classes);
    EXPECT_EQ(back.metadata, net.metadata);
    ASSERT_EQ(back.layers.size(), net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        EXPECT_STREQ(layer_kind(back.layers[i]), layer_kind(net.layers[i]));
    }
    const auto x = Tensor({2, 6, 6}, random_vector(72, 9));
    EXPECT_EQ(forward(back, x), forward(net, x));

    const auto again = scratch_dir("weights_b");
    write_network(again, back);
    for (const auto& entry : fs::directory_iterator(dir)) {
        EXPECT_EQ(bytes(entry.path()), bytes(again / entry.path().filename())) << entry.path().filename();
    }
}

TEST(WeightContainer, ParameterFilesAreNamedByLayerAndParam) {
    const auto dir = scratch_dir("weights_names");
    write_network(dir, every_layer_kind());
    for (const char* name : {"manifest", "0_weight", "0_bias", "1_gamma", "1_beta", "1_running_mean",
                             "1_running_var", "6_weight", "6_bias"}) {
        EXPECT_TRUE(fs::exists(dir / name)) << name;
    }
    EXPECT_EQ(fs::file_size(dir / "0_weight"), 4u * 2 * 9 * 4);
}

TEST(WeightContainer, BundledFixturesLoad) {
    for (const char* name : {"data/fixtures/mlp", "data/fixtures/cnn"}) {
        const auto net = read_network(source_path(name));
        EXPECT_EQ(net.num_classes, 10u);
        EXPECT_EQ(net.shapes().back(), (Shape{10}));
    }
}

TEST(WeightContainer, TruncatedParameterIsAnIoError) {
    const auto dir = scratch_dir("weights_trunc");
    write_network(dir, every_layer_kind());
    fs::resize_file(dir / "6_weight", 8);
    EXPECT_THROW(read_network(dir), IoError);
}

TEST(WeightContainer, WrongFormatTagIsAnIoError) {
    const auto dir = scratch_dir("weights_tag");
    std::ofstream(dir / "manifest") << R"({"format": "something-else"})";
    EXPECT_THROW(read_network(dir), IoError);
    std::ofstream(dir / "manifest") << "{ not json";
    EXPECT_THROW(read_network(dir), IoError);
}

TEST(WeightContainer, UnknownLayerTypeIsAnIoError) {
    const auto dir = scratch_dir("weights_kind");
    std::ofstream(dir / "manifest") << R"({"format": "xbarsim-weights", "input_shape": [4], "num_classes": 2,
        "layers": [{"type": "softmax"}]})";
    EXPECT_THROW(read_network(dir), IoError);
}

TEST(DatasetContainer, RoundTrip) {
    Dataset d;
    d.name = "tiny";
    d.sample_shape = {1, 2, 2};
    d.num_classes = 3;
    for (std::uint8_t k = 0; k < 5; ++k) {
        d.images.emplace_back(d.sample_shape, random_vector(4, k));
        d.labels.push_back(k % 3);
        for (auto& v : d.images.back().values) {
            v = static_cast<float>(v);
        }
    }
    const auto dir = scratch_dir("dataset");
    write_dataset(dir, d);
    const auto back = read_dataset(dir);
    EXPECT_EQ(back.name, "tiny");
    EXPECT_EQ(back.sample_shape, d.sample_shape);
    EXPECT_EQ(back.labels, d.labels);
    ASSERT_EQ(back.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
        EXPECT_EQ(back.images[i], d.images[i]);
    }
    EXPECT_EQ(back.head(2).size(), 2u);
    EXPECT_EQ(back.head(99).size(), 5u);
}

TEST(DatasetContainer, LabelOutOfRangeIsAnIoError) {
    Dataset d;
    d.sample_shape = {1};
    d.num_classes = 2;
    d.images = {Tensor({1}, 0.0)};
    d.labels = {1};
    const auto dir = scratch_dir("dataset_bad");
    write_dataset(dir, d);
    std::ofstream(dir / "labels", std::ios::binary) << char(7);
    EXPECT_THROW(read_dataset(dir), IoError);
}

TEST(DatasetContainer, BundledDigits) {
    const auto train = read_dataset(source_path("data/digits/train"));
    const auto test = read_dataset(source_path("data/digits/test"));
    EXPECT_EQ(train.sample_shape, (Shape{1, 8, 8}));
    EXPECT_EQ(train.num_classes, 10u);
    EXPECT_GT(train.size(), test.size());
    EXPECT_GT(test.size(), 0u);
}
