#include "xbarsim/io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>

#include "xbarsim/errors.hpp"

namespace xbarsim {

using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little, "raw tensor I/O assumes a little-endian host");

std::vector<char> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

json read_manifest(const fs::path& dir, const char* format) {
    const auto bytes = read_file(dir / "manifest");
    json m;
    try {
        m = json::parse(bytes.begin(), bytes.end());
    } catch (const json::exception& e) {
        throw IoError((dir / "manifest").string() + ": " + e.what());
    }
    if (m.value("format", "") != format) {
        throw IoError((dir / "manifest").string() + ": expected format '" + format + "'");
    }
    return m;
}

void write_text(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << text;
}

Shape to_shape(const json& j) { return j.get<Shape>(); }

}  // namespace

std::vector<double> read_raw_f32(const fs::path& path, std::size_t expected_count) {
    const auto bytes = read_file(path);
    if (bytes.size() != expected_count * sizeof(float)) {
        throw IoError(path.string() + ": expected " + std::to_string(expected_count) + " float32 values, found " +
                      std::to_string(bytes.size()) + " bytes");
    }
    std::vector<double> out(expected_count);
    for (std::size_t i = 0; i < expected_count; ++i) {
        float f;
        std::memcpy(&f, bytes.data() + i * sizeof(float), sizeof(float));
        out[i] = f;
    }
    return out;
}

void write_raw_f32(const fs::path& path, std::span<const double> values) {
    std::vector<float> f(values.begin(), values.end());
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(float)));
}

void round_to_f32(NetworkSpec& net) {
    auto round = [](std::vector<double>& v) {
        for (auto& x : v) {
            x = static_cast<float>(x);
        }
    };
    for (auto& layer : net.layers) {
        if (auto* c = std::get_if<Conv2d>(&layer)) {
            round(c->weight);
            round(c->bias);
        } else if (auto* l = std::get_if<Linear>(&layer)) {
            round(l->weight.data);
            round(l->bias);
        } else if (auto* b = std::get_if<BatchNorm>(&layer)) {
            round(b->gamma);
            round(b->beta);
            round(b->running_mean);
            round(b->running_var);
        }
    }
}

void write_network(const fs::path& dir, const NetworkSpec& net) {
    net.shapes();
    fs::create_directories(dir);
    json m;
    m["format"] = "xbarsim-weights";
    m["version"] = 1;
    m["input_shape"] = net.input_shape;
    m["num_classes"] = net.num_classes;
    m["metadata"] = net.metadata;
    json layers = json::array();
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        const auto& layer = net.layers[i];
        json l;
        l["type"] = layer_kind(layer);
        json params = json::object();
        auto put = [&](const std::string& name, std::span<const double> v, Shape shape) {
            write_raw_f32(dir / (std::to_string(i) + "_" + name), v);
            params[name] = shape;
        };
        if (const auto* c = std::get_if<Conv2d>(&layer)) {
            l["in_channels"] = c->in_channels;
            l["out_channels"] = c->out_channels;
            l["kernel"] = c->kernel;
            l["stride"] = c->stride;
            l["padding"] = c->padding;
            put("weight", c->weight, {c->out_channels, c->in_channels, c->kernel, c->kernel});
            put("bias", c->bias, {c->out_channels});
        } else if (const auto* lin = std::get_if<Linear>(&layer)) {
            l["in_features"] = lin->in_features;
            l["out_features"] = lin->out_features;
            put("weight", lin->weight.data, {lin->out_features, lin->in_features});
            put("bias", lin->bias, {lin->out_features});
        } else if (const auto* p = std::get_if<MaxPool>(&layer)) {
            l["kernel"] = p->kernel;
            l["stride"] = p->stride;
        } else if (const auto* b = std::get_if<BatchNorm>(&layer)) {
            l["epsilon"] = b->epsilon;
            put("gamma", b->gamma, {b->gamma.size()});
            put("beta", b->beta, {b->beta.size()});
            put("running_mean", b->running_mean, {b->running_mean.size()});
            put("running_var", b->running_var, {b->running_var.size()});
        } else if (const auto* d = std::get_if<Dropout>(&layer)) {
            l["rate"] = d->rate;
        }
        if (!params.empty()) {
            l["params"] = params;
        }
        layers.push_back(l);
    }
    m["layers"] = layers;
    write_text(dir / "manifest", m.dump(2) + "\n");
}

NetworkSpec read_network(const fs::path& dir) {
    const json m = read_manifest(dir, "xbarsim-weights");
    NetworkSpec net;
    try {
        net.input_shape = to_shape(m.at("input_shape"));
        net.num_classes = m.at("num_classes").get<std::size_t>();
        if (m.contains("metadata")) {
            net.metadata = m["metadata"].get<std::map<std::string, std::string>>();
        }
        const auto& layers = m.at("layers");
        for (std::size_t i = 0; i < layers.size(); ++i) {
            const auto& l = layers[i];
            const std::string type = l.at("type");
            auto param = [&](const std::string& name) {
                const Shape shape = to_shape(l.at("params").at(name));
                return read_raw_f32(dir / (std::to_string(i) + "_" + name), shape_size(shape));
            };
            if (type == "conv2d") {
                Conv2d c;
                c.in_channels = l.at("in_channels");
                c.out_channels = l.at("out_channels");
                c.kernel = l.at("kernel");
                c.stride = l.at("stride");
                c.padding = l.at("padding");
                c.weight = param("weight");
                c.bias = param("bias");
                net.layers.emplace_back(std::move(c));
            } else if (type == "linear") {
                Linear lin;
                lin.in_features = l.at("in_features");
                lin.out_features = l.at("out_features");
                lin.weight = Matrix(lin.out_features, lin.in_features);
                lin.weight.data = param("weight");
                lin.bias = param("bias");
                net.layers.emplace_back(std::move(lin));
            } else if (type == "relu") {
                net.layers.emplace_back(Relu{});
            } else if (type == "maxpool") {
                net.layers.emplace_back(MaxPool{l.at("kernel"), l.at("stride")});
            } else if (type == "batchnorm") {
                BatchNorm b;
                b.epsilon = l.at("epsilon");
                b.gamma = param("gamma");
                b.beta = param("beta");
                b.running_mean = param("running_mean");
                b.running_var = param("running_var");
                net.layers.emplace_back(std::move(b));
            } else if (type == "flatten") {
                net.layers.emplace_back(Flatten{});
            } else if (type == "dropout") {
                net.layers.emplace_back(Dropout{l.value("rate", 0.0)});
            } else {
                throw IoError("unknown layer type '" + type + "'");
            }
        }
    } catch (const json::exception& e) {
        throw IoError((dir / "manifest").string() + ": " + e.what());
    }
    net.shapes();
    return net;
}

void write_dataset(const fs::path& dir, const Dataset& data) {
    fs::create_directories(dir);
    std::vector<double> flat;
    flat.reserve(data.size() * shape_size(data.sample_shape));
    for (const auto& img : data.images) {
        if (img.shape != data.sample_shape) {
            throw ShapeError("write_dataset: image shape does not match sample_shape");
        }
        flat.insert(flat.end(), img.values.begin(), img.values.end());
    }
    write_raw_f32(dir / "images", flat);
    {
        std::ofstream out(dir / "labels", std::ios::binary);
        out.write(reinterpret_cast<const char*>(data.labels.data()), static_cast<std::streamsize>(data.labels.size()));
    }
    json m;
    m["format"] = "xbarsim-dataset";
    m["version"] = 1;
    m["name"] = data.name;
    m["count"] = data.size();
    m["sample_shape"] = data.sample_shape;
    m["num_classes"] = data.num_classes;
    write_text(dir / "manifest", m.dump(2) + "\n");
}

Dataset read_dataset(const fs::path& dir) {
    const json m = read_manifest(dir, "xbarsim-dataset");
    Dataset d;
    std::size_t count = 0;
    try {
        d.name = m.value("name", dir.filename().string());
        d.sample_shape = to_shape(m.at("sample_shape"));
        d.num_classes = m.at("num_classes");
        count = m.at("count");
    } catch (const json::exception& e) {
        throw IoError((dir / "manifest").string() + ": " + e.what());
    }
    const std::size_t per = shape_size(d.sample_shape);
    const auto flat = read_raw_f32(dir / "images", count * per);
    const auto labels = read_file(dir / "labels");
    if (labels.size() != count) {
        throw IoError((dir / "labels").string() + ": expected " + std::to_string(count) + " labels");
    }
    d.images.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        d.images.emplace_back(d.sample_shape, std::vector<double>(flat.begin() + static_cast<std::ptrdiff_t>(s * per),
                                                                  flat.begin() + static_cast<std::ptrdiff_t>((s + 1) * per)));
        d.labels.push_back(static_cast<std::uint8_t>(labels[s]));
        if (d.labels.back() >= d.num_classes) {
            throw IoError((dir / "labels").string() + ": label outside num_classes");
        }
    }
    return d;
}

}  // namespace xbarsim
