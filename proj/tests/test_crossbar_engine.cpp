#include <gtest/gtest.h>

#include <set>
#include <sstream>

#include "support.hpp"
#include "xbarsim/crossbar_engine.hpp"
#include "xbarsim/errors.hpp"

using namespace xbarsim;
using xbarsim::testing::random_matrix;
using xbarsim::testing::random_vector;
using xbarsim::testing::relative_error;

namespace {

constexpr double kGon = 1.0 / 50.0;
constexpr double kGoff = 1.0 / 1000.0;

EngineConfig ideal_engine() {
    EngineConfig e;
    e.adc_bits = 16;
    return e;
}

MappedLayer calibrated(const WeightMatrix& w, const EngineConfig& e, std::uint64_t seed = 1) {
    auto layer = map_layer(w, kGon, kGoff, e);
    // The all-ones row drives every column to its largest current, so
    // inputs in [0, 1] never overflow the calibrated converters.
    Matrix batch = random_matrix(32, w.rows(), seed + 77, 0.0, 1.0);
    std::fill(batch.data.begin(), batch.data.begin() + static_cast<std::ptrdiff_t>(w.rows()), 1.0);
    calibrate_layer(layer, batch, seed);
    return layer;
}

CrossbarTile diag_tile(double a, double b) {
    CrossbarTile t;
    t.placement = {{2, 2}, 0, 0, 2, 2};
    t.g = {a, 0.0, 0.0, b};
    return t;
}

}  // namespace

TEST(PartitionTiles, FitsInOne) {
    const std::vector<TileShape> shapes{{64, 64}};
    const auto p = partition_tiles(10, 10, shapes);
    ASSERT_EQ(p.size(), 1u);
    EXPECT_EQ(p[0], (TilePlacement{{64, 64}, 0, 0, 10, 10}));
}

TEST(PartitionTiles, CeilingGrid) {
    const std::vector<TileShape> shapes{{64, 64}};
    const auto p = partition_tiles(100, 100, shapes);
    ASSERT_EQ(p.size(), 4u);
    EXPECT_EQ(p[0], (TilePlacement{{64, 64}, 0, 0, 64, 64}));
    EXPECT_EQ(p[1], (TilePlacement{{64, 64}, 0, 64, 64, 36}));
    EXPECT_EQ(p[2], (TilePlacement{{64, 64}, 64, 0, 36, 64}));
    EXPECT_EQ(p[3], (TilePlacement{{64, 64}, 64, 64, 36, 36}));
}

TEST(PartitionTiles, BestFitPicksSmallestFittingShape) {
    const std::vector<TileShape> shapes{{64, 64}, {128, 128}, {256, 256}};
    const auto p = partition_tiles(100, 100, shapes);
    ASSERT_EQ(p.size(), 1u);
    EXPECT_EQ(p[0].shape, (TileShape{128, 128}));
}

TEST(PartitionTiles, AreaTieGoesToFewerRows) {
    const std::vector<TileShape> shapes{{128, 32}, {32, 128}};
    const auto p = partition_tiles(20, 20, shapes);
    ASSERT_EQ(p.size(), 1u);
    EXPECT_EQ(p[0].shape, (TileShape{32, 128}));
}

TEST(PartitionTiles, RemainderBlocksUseBestFit) {
    const std::vector<TileShape> shapes{{64, 64}, {16, 16}};
    const auto p = partition_tiles(70, 10, shapes);
    ASSERT_EQ(p.size(), 2u);
    EXPECT_EQ(p[0].shape, (TileShape{64, 64}));
    EXPECT_EQ(p[1], (TilePlacement{{16, 16}, 64, 0, 6, 10}));
}

TEST(PartitionTiles, CoversEveryCellExactlyOnce) {
    CounterRng rng(42);
    const std::vector<std::vector<TileShape>> sets{
        {{64, 64}}, {{128, 128}, {256, 64}}, {{64, 64}, {128, 128}, {256, 256}}, {{7, 13}, {32, 5}}};
    for (int trial = 0; trial < 60; ++trial) {
        const auto rows = 1 + static_cast<std::size_t>(rng.uniform() * 300);
        const auto cols = 1 + static_cast<std::size_t>(rng.uniform() * 300);
        const auto& shapes = sets[static_cast<std::size_t>(trial) % sets.size()];
        std::vector<int> hits(rows * cols, 0);
        for (const auto& p : partition_tiles(rows, cols, shapes)) {
            ASSERT_LE(p.rows, p.shape.rows);
            ASSERT_LE(p.cols, p.shape.cols);
            for (std::size_t r = 0; r < p.rows; ++r) {
                for (std::size_t c = 0; c < p.cols; ++c) {
                    ++hits[(p.origin_row + r) * cols + p.origin_col + c];
                }
            }
        }
        for (int h : hits) {
            ASSERT_EQ(h, 1);
        }
    }
}

TEST(PartitionTiles, NoShapesThrows) {
    EXPECT_THROW(partition_tiles(4, 4, {}), UsageError);
}

TEST(DacEncode, LinearFullScaleAndClipping) {
    const DacConfig dac{9.0};
    EXPECT_EQ(dac_encode(std::vector<double>{0.0, 0.0}, dac, 2.0), (std::vector<double>{0.0, 0.0}));
    EXPECT_EQ(dac_encode(std::vector<double>{2.0}, dac, 2.0)[0], 9.0);
    EXPECT_EQ(dac_encode(std::vector<double>{4.0}, dac, 2.0)[0], 9.0);
    EXPECT_EQ(dac_encode(std::vector<double>{-4.0}, dac, 2.0)[0], -9.0);
    EXPECT_DOUBLE_EQ(dac_encode(std::vector<double>{0.5}, dac, 2.0)[0], 2.25);
    EXPECT_THROW(dac_encode(std::vector<double>{1.0}, dac, 0.0), DomainError);
}

TEST(TileMvm, Diagonal) {
    const auto i = tile_mvm(diag_tile(0.01, 0.02), std::vector<double>{1.0, 1.0});
    EXPECT_EQ(i, (std::vector<double>{0.01, 0.02}));
}

TEST(TileMvm, ZeroVoltageZeroCurrent) {
    const auto i = tile_mvm(diag_tile(0.01, 0.02), std::vector<double>{0.0, 0.0});
    EXPECT_EQ(i, (std::vector<double>{0.0, 0.0}));
}

TEST(TileMvm, MatchesDenseOracle) {
    CrossbarTile t;
    t.placement = {{8, 8}, 0, 0, 8, 8};
    t.g = random_vector(64, 5, kGoff, kGon);
    const auto v = random_vector(8, 6, -9.0, 9.0);
    std::vector<double> oracle(8, 0.0);
    for (std::size_t c = 0; c < 8; ++c) {
        for (std::size_t r = 0; r < 8; ++r) {
            oracle[c] += v[r] * t.g[r * 8 + c];
        }
    }
    EXPECT_LT(relative_error(tile_mvm(t, v), oracle), 1e-12);
}

TEST(TileMvm, LengthMismatchThrows) {
    EXPECT_THROW(tile_mvm(diag_tile(1, 1), std::vector<double>{1.0}), UsageError);
}

TEST(AdcDecode, TopCodeAndOverflow) {
    const AdcConfig adc{8, 0.0, 2.0};
    EXPECT_EQ(adc_decode(2.0, adc), 2.0);
    EXPECT_EQ(adc_decode(3.0, adc), 2.0);
    EXPECT_EQ(adc_decode(-3.0, adc), -2.0);
}

TEST(AdcDecode, TwoBitLevels) {
    const AdcConfig adc{2, 0.0, 3.0};
    EXPECT_DOUBLE_EQ(adc_decode(0.9, adc), 1.0);
    EXPECT_DOUBLE_EQ(adc_decode(-0.9, adc), -1.0);
    EXPECT_DOUBLE_EQ(adc_decode(2.5, adc), 3.0);
}

TEST(AdcDecode, UncalibratedThrows) {
    EXPECT_THROW(adc_decode(1.0, AdcConfig{8, 0.0, 0.0}), UsageError);
}

TEST(AdcDecode, Monotone) {
    const AdcConfig adc{4, 0.0, 1.0};
    double prev = -2.0;
    for (int k = -300; k <= 300; ++k) {
        const double y = adc_decode(k / 200.0, adc);
        EXPECT_GE(y, prev);
        prev = y;
    }
}

TEST(CalibrateAdc, Quantiles) {
    EXPECT_EQ(calibrate_adc({}, std::vector<double>{1, 2, 3}, 0.0).i_max, 3.0);
    std::vector<double> hundred(100);
    for (int k = 0; k < 100; ++k) {
        hundred[static_cast<std::size_t>(k)] = k + 1;
    }
    EXPECT_EQ(calibrate_adc({}, hundred, 0.05).i_max, 95.0);
    EXPECT_EQ(calibrate_adc({}, std::vector<double>{-4, 1}, 0.0).i_max, 4.0);
}

TEST(CalibrateAdc, DegenerateObservations) {
    EXPECT_THROW(calibrate_adc({}, std::vector<double>{0.0}, 0.0), CalibrationError);
    EXPECT_THROW(calibrate_adc({}, std::vector<double>{}, 0.0), UsageError);
}

TEST(MappedMvm, IdentityIdeal) {
    Matrix eye(2, 2);
    eye(0, 0) = eye(1, 1) = 1.0;
    const auto layer = calibrated(WeightMatrix::from(eye), ideal_engine());
    const auto y = mapped_mvm(layer, std::vector<double>{0.5, 1.0});
    EXPECT_LT(relative_error(y, std::vector<double>{0.5, 1.0}), 1e-3);
}

TEST(MappedMvm, NegativeWeightsIdeal) {
    const auto w = WeightMatrix::from(random_matrix(20, 12, 4, -2.0, 1.0));
    const auto layer = calibrated(w, ideal_engine());
    for (std::uint64_t s = 0; s < 10; ++s) {
        const auto x = random_vector(20, 50 + s);
        EXPECT_LT(relative_error(mapped_mvm(layer, x), digital_mvm(w, x)), 1e-3);
    }
}

TEST(MappedMvm, AdcErrorShrinksWithResolution) {
    const auto w = WeightMatrix::from(random_matrix(20, 12, 4, -2.0, 1.0));
    std::vector<double> err;
    for (int bits : {4, 8, 12, 16}) {
        EngineConfig e;
        e.adc_bits = bits;
        const auto layer = calibrated(w, e);
        double sum = 0.0;
        for (std::uint64_t s = 0; s < 20; ++s) {
            const auto x = random_vector(20, 50 + s);
            sum += relative_error(mapped_mvm(layer, x), digital_mvm(w, x));
        }
        err.push_back(sum / 20);
    }
    for (std::size_t k = 1; k < err.size(); ++k) {
        EXPECT_LT(err[k], err[k - 1]);
    }
    EXPECT_LT(err.back(), 1e-3);
}

TEST(MappedMvm, ZeroInputZeroOutput) {
    const auto layer = calibrated(WeightMatrix::from(random_matrix(9, 4, 2)), EngineConfig{});
    for (double v : mapped_mvm(layer, std::vector<double>(9, 0.0))) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(MappedMvm, ErrorsOnMisuse) {
    const auto w = WeightMatrix::from(random_matrix(3, 3, 2));
    const auto raw = map_layer(w, kGon, kGoff, EngineConfig{});
    EXPECT_THROW(mapped_mvm(raw, std::vector<double>(3, 0.1)), UsageError);
    const auto layer = calibrated(w, EngineConfig{});
    EXPECT_THROW(mapped_mvm(layer, std::vector<double>(4, 0.1)), UsageError);
}

TEST(MappedMvm, IdealPipelineMatchesDigitalOnRandomLayers) {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto w = WeightMatrix::from(random_matrix(64, 64, seed));
        const auto layer = calibrated(w, ideal_engine(), seed);
        const auto x = random_vector(64, seed + 500);
        EXPECT_LT(relative_error(mapped_mvm(layer, x), digital_mvm(w, x)), 1e-3);
    }
}

TEST(MappedMvm, TileShapeDoesNotChangeIdealAnalogResult) {
    const auto w = WeightMatrix::from(random_matrix(150, 90, 3));
    EngineConfig small;
    small.use_adc = false;
    EngineConfig large = small;
    large.tiles = {{256, 256}};
    const auto a = calibrated(w, small);
    const auto b = calibrated(w, large);
    EXPECT_GT(a.pos.size(), 1u);
    EXPECT_EQ(b.pos.size(), 1u);
    const auto x = random_vector(150, 9);
    EXPECT_LT(relative_error(analog_mvm(a, x), analog_mvm(b, x)), 1e-9);
    EXPECT_LT(relative_error(mapped_mvm(a, x), mapped_mvm(b, x)), 1e-9);
}

TEST(MappedMvm, ScalingInputPreservesArgmax) {
    const auto w = WeightMatrix::from(random_matrix(32, 10, 6));
    const auto layer = calibrated(w, ideal_engine());
    const auto x = random_vector(32, 7);
    auto arg = [](const std::vector<double>& y) { return std::max_element(y.begin(), y.end()) - y.begin(); };
    const auto base = arg(mapped_mvm(layer, x));
    for (double alpha : {0.9, 0.5, 0.25}) {
        auto xs = x;
        for (auto& v : xs) {
            v *= alpha;
        }
        EXPECT_EQ(arg(mapped_mvm(layer, xs)), base);
    }
}

TEST(MapLayer, PaddingHoldsNominalOffConductance) {
    const auto layer = map_layer(WeightMatrix::from(random_matrix(10, 5, 1)), kGon, kGoff, EngineConfig{});
    const auto& t = layer.pos[0];
    for (std::size_t r = 0; r < t.placement.shape.rows; ++r) {
        for (std::size_t c = 0; c < t.placement.shape.cols; ++c) {
            if (!t.occupied(r, c)) {
                ASSERT_EQ(t.g[t.index(r, c)], kGoff);
            }
        }
    }
}

TEST(MapLayer, LowMaxVoltageClampsReachableLevels) {
    EngineConfig e;
    e.v_max = 3.0;
    const auto layer = map_layer(WeightMatrix::from(random_matrix(8, 8, 1)), kGon, kGoff, e);
    double top = 0.0;
    for (const auto& t : layer.pos) {
        for (double v : t.g) {
            top = std::max(top, v);
        }
    }
    EXPECT_NEAR(top, kGoff + (kGon - kGoff) * 0.5, 1e-15);
}

TEST(MapLayer, UncalibratedUntilCalibrated) {
    auto layer = map_layer(WeightMatrix::from(random_matrix(4, 4, 1)), kGon, kGoff, EngineConfig{});
    EXPECT_FALSE(layer.calibrated());
    calibrate_layer(layer, random_matrix(8, 4, 2, 0.0, 1.0), 3);
    EXPECT_TRUE(layer.calibrated());
}

TEST(CalibrateLayer, SilentBatchFallsBackToProbes) {
    auto layer = map_layer(WeightMatrix::from(random_matrix(6, 3, 1)), kGon, kGoff, EngineConfig{});
    calibrate_layer(layer, Matrix(4, 6, 0.0), 3);
    EXPECT_TRUE(layer.calibrated());
    EXPECT_EQ(layer.x_ref, 1.0);
    for (const auto& adc : layer.adc) {
        EXPECT_GT(adc.i_max, 0.0);
    }
}

TEST(EngineConfig, ValidateNamesTheField) {
    EngineConfig e;
    e.adc_bits = 0;
    try {
        e.validate();
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& err) {
        EXPECT_NE(std::string(err.what()).find("adc_bits"), std::string::npos);
    }
}

TEST(TileLayoutCsv, HeaderAndRows) {
    const std::vector<TileShape> shapes{{64, 64}};
    const auto p = partition_tiles(100, 10, shapes);
    std::ostringstream out;
    write_tile_layout_csv(out, p);
    EXPECT_EQ(out.str(),
              "tile_id,origin_row,origin_col,rows,cols,shape_rows,shape_cols\n"
              "0,0,0,64,10,64,64\n"
              "1,64,0,36,10,64,64\n");
}
