#include "remnet/gradcheck.hpp"

#include <cmath>
#include <sstream>

#include "remnet/common.hpp"
#include "remnet/ops.hpp"

namespace remnet {

namespace {

double rel_err(double a, double n) {
    const double diff = std::fabs(a - n);
    const double denom = std::max({1.0, std::fabs(a), std::fabs(n)});
    return diff / denom;
}

double eval_scalar(const ScalarGraphFn& fn, const std::vector<TensorD>& inputs) {
    std::vector<VarD> leaves;
    leaves.reserve(inputs.size());
    for (const auto& t : inputs) leaves.push_back(VarD::leaf(t, false));
    VarD out = fn(leaves);
    if (out.value().numel() != 1) throw ShapeError("gradcheck: op must reduce to a scalar");
    return out.value().data[0];
}

TensorD random_tensor(Shape s, Rng& rng, double lo = -1.0, double hi = 1.0) {
    TensorD t(std::move(s));
    for (auto& v : t.data) v = lo + (hi - lo) * next_double(rng);
    return t;
}

// Random values kept away from zero, for ops with a kink at the origin.
TensorD random_tensor_off_origin(Shape s, Rng& rng, double margin = 0.05) {
    TensorD t(std::move(s));
    for (auto& v : t.data) {
        const double u = 2.0 * next_double(rng) - 1.0;
        v = (u >= 0 ? 1.0 : -1.0) * (margin + std::fabs(u));
    }
    return t;
}

}  // namespace

GradCheckReport finite_difference_gradcheck(const std::string& op_name, const ScalarGraphFn& fn,
                                            const std::vector<TensorD>& inputs, double tolerance,
                                            double step) {
    GradCheckReport report;
    report.op_name = op_name;
    report.tolerance = tolerance;

    std::vector<VarD> leaves;
    leaves.reserve(inputs.size());
    for (const auto& t : inputs) leaves.push_back(VarD::leaf(t, true));
    VarD out = fn(leaves);
    if (out.value().numel() != 1) throw ShapeError("gradcheck: op must reduce to a scalar");
    out.backward();

    std::vector<TensorD> analytic;
    analytic.reserve(inputs.size());
    for (auto& leaf : leaves) {
        TensorD g = leaf.node()->grad;
        if (g.shape != leaf.value().shape) g = TensorD(leaf.value().shape);
        analytic.push_back(std::move(g));
    }

    std::vector<TensorD> work = inputs;
    for (std::size_t k = 0; k < work.size(); ++k) {
        double worst = 0.0;
        for (std::size_t i = 0; i < work[k].numel(); ++i) {
            const double saved = work[k].data[i];
            work[k].data[i] = saved + step;
            const double fp = eval_scalar(fn, work);
            work[k].data[i] = saved - step;
            const double fm = eval_scalar(fn, work);
            work[k].data[i] = saved;
            const double numeric = (fp - fm) / (2.0 * step);
            worst = std::max(worst, rel_err(analytic[k].data[i], numeric));
        }
        report.max_rel_err.push_back(worst);
        report.worst = std::max(report.worst, worst);
    }
    report.passed = report.worst < tolerance;
    return report;
}

std::vector<GradCheckReport> run_standard_gradchecks(std::uint64_t seed, int instances,
                                                     double tolerance) {
    std::vector<GradCheckReport> out;

    // Fixed random projection to a scalar, so every output element contributes.
    auto project = [](const VarD& v, const TensorD& coeff) {
        const std::size_t n = v.value().numel();
        TensorD c = coeff;
        auto pv = v.node();
        TensorD val({1});
        for (std::size_t i = 0; i < n; ++i) val.data[0] += v.value().data[i] * c.data[i];
        return VarD::make(std::move(val), {pv}, [pv, c](GraphNode<double>& self) {
            if (!pv->requires_grad) return;
            TensorD g(pv->value.shape);
            for (std::size_t i = 0; i < g.numel(); ++i) g.data[i] = c.data[i] * self.grad.data[0];
            pv->accumulate(g);
        });
    };

    for (int inst = 0; inst < instances; ++inst) {
        Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(inst)}));

        {  // conv2d: input, weight, bias all checked
            const int stride = (inst % 2) + 1;
            TensorD x = random_tensor({1, 5, 5, 2}, rng);
            TensorD w = random_tensor({3, 3, 2, 3}, rng);
            TensorD b = random_tensor({3}, rng);
            TensorD coeff = random_tensor({1, conv_out_extent(5, stride), conv_out_extent(5, stride), 3}, rng);
            auto fn = [stride, coeff, &project](std::vector<VarD>& in) {
                return project(conv2d(in[0], in[1], in[2], stride), coeff);
            };
            out.push_back(finite_difference_gradcheck("conv2d(stride=" + std::to_string(stride) + ")",
                                                      fn, {x, w, b}, tolerance));
        }
        {  // batch_norm, train mode
            TensorD x = random_tensor({8, 1, 1, 2}, rng);
            TensorD gamma = random_tensor({2}, rng, 0.5, 1.5);
            TensorD beta = random_tensor({2}, rng);
            TensorD coeff = random_tensor({8, 1, 1, 2}, rng);
            auto fn = [coeff, &project](std::vector<VarD>& in) {
                return project(batch_norm_train(in[0], in[1], in[2], 1e-5).out, coeff);
            };
            out.push_back(finite_difference_gradcheck("batch_norm(train)", fn, {x, gamma, beta},
                                                      tolerance));
        }
        {  // batch_norm, inference mode
            TensorD x = random_tensor({2, 2, 2, 3}, rng);
            TensorD gamma = random_tensor({3}, rng, 0.5, 1.5);
            TensorD beta = random_tensor({3}, rng);
            TensorD rm = random_tensor({3}, rng);
            TensorD rv = random_tensor({3}, rng, 0.5, 1.5);
            TensorD coeff = random_tensor({2, 2, 2, 3}, rng);
            auto fn = [coeff, rm, rv, &project](std::vector<VarD>& in) {
                return project(batch_norm_infer(in[0], in[1], in[2], rm, rv, 1e-5), coeff);
            };
            out.push_back(finite_difference_gradcheck("batch_norm(infer)", fn, {x, gamma, beta},
                                                      tolerance));
        }
        {  // prelu
            TensorD x = random_tensor_off_origin({2, 3, 3, 2}, rng);
            TensorD alpha = random_tensor({2}, rng, 0.05, 0.5);
            TensorD coeff = random_tensor({2, 3, 3, 2}, rng);
            auto fn = [coeff, &project](std::vector<VarD>& in) {
                return project(prelu(in[0], in[1]), coeff);
            };
            out.push_back(finite_difference_gradcheck("prelu", fn, {x, alpha}, tolerance));
        }
        {  // avg_pool
            TensorD x = random_tensor({2, 4, 4, 3}, rng);
            TensorD coeff = random_tensor({2, 2, 2, 3}, rng);
            auto fn = [coeff, &project](std::vector<VarD>& in) {
                return project(avg_pool(in[0], 2), coeff);
            };
            out.push_back(finite_difference_gradcheck("avg_pool", fn, {x}, tolerance));
        }
        {  // channel_concat
            TensorD a = random_tensor({2, 2, 2, 2}, rng);
            TensorD b = random_tensor({2, 2, 2, 3}, rng);
            TensorD coeff = random_tensor({2, 2, 2, 5}, rng);
            auto fn = [coeff, &project](std::vector<VarD>& in) {
                return project(concat_channels(in[0], in[1]), coeff);
            };
            out.push_back(finite_difference_gradcheck("channel_concat", fn, {a, b}, tolerance));
        }
        {  // pointwise_sub
            TensorD a = random_tensor({2, 3, 3, 2}, rng);
            TensorD b = random_tensor({2, 3, 3, 2}, rng);
            TensorD coeff = random_tensor({2, 3, 3, 2}, rng);
            auto fn = [coeff, &project](std::vector<VarD>& in) {
                return project(subtract(in[0], in[1]), coeff);
            };
            out.push_back(finite_difference_gradcheck("pointwise_sub", fn, {a, b}, tolerance));
        }
        {  // softmax_cross_entropy (already scalar)
            TensorD logits = random_tensor({2, 5}, rng, -2.0, 2.0);
            std::vector<int> labels = {static_cast<int>(uniform_below(rng, 5)),
                                       static_cast<int>(uniform_below(rng, 5))};
            auto fn = [labels](std::vector<VarD>& in) {
                return softmax_cross_entropy(in[0], labels).loss;
            };
            out.push_back(finite_difference_gradcheck("softmax_cross_entropy", fn, {logits},
                                                      tolerance));
        }
    }
    return out;
}

std::string format_gradcheck_table(const std::vector<GradCheckReport>& reports) {
    std::ostringstream os;
    for (const auto& r : reports) {
        os << (r.passed ? "pass" : "FAIL") << "  " << r.op_name << "  max_rel_err=";
        os.setf(std::ios::scientific);
        os.precision(3);
        os << r.worst << "  tol=" << r.tolerance << "\n";
        os.unsetf(std::ios::scientific);
    }
    return os.str();
}

}  // namespace remnet
