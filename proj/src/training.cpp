#include "xbarsim/training.hpp"

#include <algorithm>
#include <cmath>

#include "xbarsim/errors.hpp"
#include "xbarsim/format.hpp"
#include "xbarsim/io.hpp"
#include "xbarsim/rng.hpp"

namespace xbarsim {

namespace {

constexpr std::size_t kChunks = 32;

struct ParamGrad {
    std::vector<double> w;
    std::vector<double> b;
};

using Grads = std::vector<ParamGrad>;

Grads zero_grads(const NetworkSpec& net) {
    Grads g(net.layers.size());
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (const auto* c = std::get_if<Conv2d>(&net.layers[i])) {
            g[i].w.assign(c->weight.size(), 0.0);
            g[i].b.assign(c->bias.size(), 0.0);
        } else if (const auto* l = std::get_if<Linear>(&net.layers[i])) {
            g[i].w.assign(l->weight.data.size(), 0.0);
            g[i].b.assign(l->bias.size(), 0.0);
        }
    }
    return g;
}

Tensor backward_conv(const Conv2d& l, const Tensor& x, const Tensor& gy, ParamGrad& g) {
    const std::size_t h = x.shape[1], w = x.shape[2];
    const std::size_t oh = gy.shape[1], ow = gy.shape[2];
    Tensor gx(x.shape);
    for (std::size_t o = 0; o < l.out_channels; ++o) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                const double d = gy.values[(o * oh + oy) * ow + ox];
                if (d == 0.0) {
                    continue;
                }
                g.b[o] += d;
                for (std::size_t c = 0; c < l.in_channels; ++c) {
                    for (std::size_t ky = 0; ky < l.kernel; ++ky) {
                        const auto iy = static_cast<std::ptrdiff_t>(oy * l.stride + ky) - static_cast<std::ptrdiff_t>(l.padding);
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(h)) {
                            continue;
                        }
                        for (std::size_t kx = 0; kx < l.kernel; ++kx) {
                            const auto ix = static_cast<std::ptrdiff_t>(ox * l.stride + kx) - static_cast<std::ptrdiff_t>(l.padding);
                            if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(w)) {
                                continue;
                            }
                            const std::size_t xi = (c * h + static_cast<std::size_t>(iy)) * w + static_cast<std::size_t>(ix);
                            const std::size_t wi = ((o * l.in_channels + c) * l.kernel + ky) * l.kernel + kx;
                            g.w[wi] += d * x.values[xi];
                            gx.values[xi] += d * l.weight[wi];
                        }
                    }
                }
            }
        }
    }
    return gx;
}

Tensor backward_linear(const Linear& l, const Tensor& x, const Tensor& gy, ParamGrad& g) {
    Tensor gx(x.shape);
    for (std::size_t o = 0; o < l.out_features; ++o) {
        const double d = gy.values[o];
        g.b[o] += d;
        const auto row = l.weight.row(o);
        for (std::size_t i = 0; i < l.in_features; ++i) {
            g.w[o * l.in_features + i] += d * x.values[i];
            gx.values[i] += d * row[i];
        }
    }
    return gx;
}

Tensor backward_maxpool(const MaxPool& p, const Tensor& x, const Tensor& gy) {
    const std::size_t h = x.shape[1], w = x.shape[2];
    const std::size_t oh = gy.shape[1], ow = gy.shape[2];
    Tensor gx(x.shape);
    for (std::size_t c = 0; c < x.shape[0]; ++c) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
            for (std::size_t ox = 0; ox < ow; ++ox) {
                std::size_t best = (c * h + oy * p.stride) * w + ox * p.stride;
                for (std::size_t ky = 0; ky < p.kernel; ++ky) {
                    for (std::size_t kx = 0; kx < p.kernel; ++kx) {
                        const std::size_t idx = (c * h + oy * p.stride + ky) * w + ox * p.stride + kx;
                        if (x.values[idx] > x.values[best]) {
                            best = idx;
                        }
                    }
                }
                gx.values[best] += gy.values[(c * oh + oy) * ow + ox];
            }
        }
    }
    return gx;
}

Tensor backward_layer(const Layer& layer, const Tensor& x, const Tensor& gy, ParamGrad& g) {
    if (const auto* c = std::get_if<Conv2d>(&layer)) {
        return backward_conv(*c, x, gy, g);
    }
    if (const auto* l = std::get_if<Linear>(&layer)) {
        return backward_linear(*l, x, gy, g);
    }
    if (std::holds_alternative<Relu>(layer)) {
        Tensor gx = gy;
        for (std::size_t i = 0; i < gx.size(); ++i) {
            if (!(x.values[i] > 0.0)) {
                gx.values[i] = 0.0;
            }
        }
        return gx;
    }
    if (const auto* p = std::get_if<MaxPool>(&layer)) {
        return backward_maxpool(*p, x, gy);
    }
    if (const auto* b = std::get_if<BatchNorm>(&layer)) {
        Tensor gx = gy;
        const std::size_t per = gx.size() / x.shape[0];
        for (std::size_t c = 0; c < x.shape[0]; ++c) {
            const double scale = b->gamma[c] / std::sqrt(b->running_var[c] + b->epsilon);
            for (std::size_t n = 0; n < per; ++n) {
                gx.values[c * per + n] *= scale;
            }
        }
        return gx;
    }
    // flatten / dropout: identity on values
    return Tensor(x.shape, gy.values);
}

// Softmax cross-entropy of one sample; writes dE/dlogits into `grad`.
double softmax_xent(const Tensor& logits, std::size_t label, Tensor& grad) {
    const double m = *std::max_element(logits.values.begin(), logits.values.end());
    double z = 0.0;
    grad = logits;
    for (auto& v : grad.values) {
        v = std::exp(v - m);
        z += v;
    }
    for (auto& v : grad.values) {
        v /= z;
    }
    const double loss = -(logits.values[label] - m - std::log(z));
    grad.values[label] -= 1.0;
    return loss;
}

void init_uniform(std::vector<double>& v, double bound, std::uint64_t key) {
    CounterRng rng(key);
    for (auto& x : v) {
        x = rng.uniform(-bound, bound);
    }
}

}  // namespace

NetworkSpec make_architecture(const TrainOptions& options, const Shape& sample_shape, std::size_t num_classes) {
    if (num_classes < 2) {
        throw ConfigError("make_architecture: need at least two classes");
    }
    NetworkSpec net;
    net.input_shape = sample_shape;
    net.num_classes = num_classes;
    const std::size_t features = shape_size(sample_shape);
    auto linear = [&](std::size_t in, std::size_t out) {
        Linear l;
        l.in_features = in;
        l.out_features = out;
        l.weight = Matrix(out, in);
        l.bias.assign(out, 0.0);
        return l;
    };
    if (options.architecture == "linear") {
        net.layers = {Flatten{}, linear(features, num_classes)};
    } else if (options.architecture == "mlp") {
        net.layers = {Flatten{}, linear(features, options.hidden), Relu{}, linear(options.hidden, num_classes)};
    } else if (options.architecture == "cnn") {
        if (sample_shape.size() != 3) {
            throw ConfigError("make_architecture: cnn needs (C, H, W) samples");
        }
        auto conv = [](std::size_t in, std::size_t out) {
            Conv2d c;
            c.in_channels = in;
            c.out_channels = out;
            c.kernel = 3;
            c.stride = 1;
            c.padding = 1;
            c.weight.assign(out * in * 9, 0.0);
            c.bias.assign(out, 0.0);
            return c;
        };
        const std::size_t pooled = options.channels * (sample_shape[1] / 2) * (sample_shape[2] / 2);
        net.layers = {conv(sample_shape[0], options.channels), Relu{}, MaxPool{2, 2}, Flatten{},
                      linear(pooled, num_classes)};
    } else {
        throw ConfigError("make_architecture: unknown architecture '" + options.architecture + "'");
    }
    for (std::size_t i = 0; i < net.layers.size(); ++i) {
        if (auto* c = std::get_if<Conv2d>(&net.layers[i])) {
            const double fan_in = static_cast<double>(c->in_channels * c->kernel * c->kernel);
            const double fan_out = static_cast<double>(c->out_channels * c->kernel * c->kernel);
            init_uniform(c->weight, std::sqrt(6.0 / (fan_in + fan_out)), derive_seed(options.seed, {i, 0}));
        } else if (auto* l = std::get_if<Linear>(&net.layers[i])) {
            const double bound = std::sqrt(6.0 / static_cast<double>(l->in_features + l->out_features));
            init_uniform(l->weight.data, bound, derive_seed(options.seed, {i, 0}));
        }
    }
    net.shapes();
    return net;
}

double cross_entropy(const NetworkSpec& net, const Dataset& data) {
    double total = 0.0;
    Tensor g;
    for (std::size_t s = 0; s < data.size(); ++s) {
        total += softmax_xent(forward(net, data.images[s]), data.labels[s], g);
    }
    return total / static_cast<double>(data.size());
}

NetworkSpec train(NetworkSpec net, const Dataset& data, std::size_t epochs, double learning_rate,
                  TrainReport* report) {
    if (data.size() == 0) {
        throw UsageError("train: empty dataset");
    }
    if (!(learning_rate >= 0.0)) {
        throw ConfigError("train: learning rate must be >= 0");
    }
    net.shapes();
    const std::size_t n = data.size();
    const std::size_t chunks = std::min(kChunks, n);
    for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
        std::vector<Grads> partial(chunks, zero_grads(net));
        std::vector<double> chunk_loss(chunks, 0.0);
#pragma omp parallel for schedule(dynamic, 1)
        for (std::ptrdiff_t ci = 0; ci < static_cast<std::ptrdiff_t>(chunks); ++ci) {
            const auto c = static_cast<std::size_t>(ci);
            const std::size_t begin = c * n / chunks;
            const std::size_t end = (c + 1) * n / chunks;
            std::vector<Tensor> acts(net.layers.size() + 1);
            for (std::size_t s = begin; s < end; ++s) {
                acts[0] = data.images[s];
                for (std::size_t i = 0; i < net.layers.size(); ++i) {
                    acts[i + 1] = forward_layer(acts[i], net.layers[i]);
                }
                Tensor grad;
                chunk_loss[c] += softmax_xent(acts.back(), data.labels[s], grad);
                for (std::size_t i = net.layers.size(); i-- > 0;) {
                    grad = backward_layer(net.layers[i], acts[i], grad, partial[c][i]);
                }
            }
        }
        double loss = 0.0;
        for (double l : chunk_loss) {
            loss += l;
        }
        loss /= static_cast<double>(n);
        if (!std::isfinite(loss)) {
            throw TrainingError("training diverged at epoch " + std::to_string(epoch) +
                                " (non-finite loss); try a smaller learning rate");
        }
        if (report) {
            report->loss.push_back(loss);
        }
        Grads total = std::move(partial[0]);
        for (std::size_t c = 1; c < chunks; ++c) {
            for (std::size_t i = 0; i < total.size(); ++i) {
                for (std::size_t k = 0; k < total[i].w.size(); ++k) {
                    total[i].w[k] += partial[c][i].w[k];
                }
                for (std::size_t k = 0; k < total[i].b.size(); ++k) {
                    total[i].b[k] += partial[c][i].b[k];
                }
            }
        }
        const double step = learning_rate / static_cast<double>(n);
        for (std::size_t i = 0; i < net.layers.size(); ++i) {
            std::vector<double>* w = nullptr;
            std::vector<double>* b = nullptr;
            if (auto* c = std::get_if<Conv2d>(&net.layers[i])) {
                w = &c->weight;
                b = &c->bias;
            } else if (auto* l = std::get_if<Linear>(&net.layers[i])) {
                w = &l->weight.data;
                b = &l->bias;
            } else {
                continue;
            }
            for (std::size_t k = 0; k < w->size(); ++k) {
                (*w)[k] -= step * total[i].w[k];
            }
            for (std::size_t k = 0; k < b->size(); ++k) {
                (*b)[k] -= step * total[i].b[k];
            }
        }
    }
    if (report) {
        std::size_t correct = 0;
        for (std::size_t s = 0; s < n; ++s) {
            correct += argmax(forward(net, data.images[s])) == data.labels[s];
        }
        report->train_accuracy = static_cast<double>(correct) / static_cast<double>(n);
    }
    return net;
}

NetworkSpec train_fixture(const Dataset& data, const TrainOptions& options, TrainReport* report) {
    if (data.size() == 0) {
        throw UsageError("train_fixture: empty dataset");
    }
    NetworkSpec net = make_architecture(options, data.sample_shape, data.num_classes);
    TrainReport local;
    net = train(std::move(net), data, options.epochs, options.learning_rate, &local);
    round_to_f32(net);
    net.metadata["architecture"] = options.architecture;
    net.metadata["dataset"] = data.name;
    net.metadata["epochs"] = std::to_string(options.epochs);
    net.metadata["learning_rate"] = format_double(options.learning_rate);
    net.metadata["seed"] = std::to_string(options.seed);
    net.metadata["train_accuracy"] = format_double(local.train_accuracy);
    if (report) {
        *report = std::move(local);
    }
    return net;
}

}  // namespace xbarsim
