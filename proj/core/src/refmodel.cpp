#include "hsical/refmodel.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include "hsical/error.hpp"
#include "hsical/io.hpp"
#include "hsical/lm.hpp"
#include "hsical/parallel.hpp"
#include "hsical/signal.hpp"
#include "hsical/spectral.hpp"

namespace hsical {

double GaussianVignetting::operator()(double i, double j) const noexcept {
    const double di = i - mu_i, dj = j - mu_j;
    return std::exp(-(di * di + dj * dj) / (2.0 * sigma * sigma));
}

std::string to_string(FitMethod m) {
    switch (m) {
        case FitMethod::nonparametric: return "nonparametric";
        case FitMethod::gaussian_joint: return "gaussian-joint";
        case FitMethod::gaussian_sequential: return "gaussian-sequential";
    }
    return "unknown";
}

FitMethod parse_fit_method(const std::string& name) {
    if (name == "nonparametric") return FitMethod::nonparametric;
    if (name == "gaussian-joint") return FitMethod::gaussian_joint;
    if (name == "gaussian-sequential") return FitMethod::gaussian_sequential;
    throw InvalidArgument("unknown fit method '" + name + "'");
}

double WhiteReferenceModel::vignetting(int i, int j) const noexcept {
    if (const auto* g = std::get_if<GaussianVignetting>(&V)) return (*g)(i, j);
    return std::get<VignettingField>(V)(i, j);
}

ReflectivityFactors reflectivity_factors(const SampledSpectrum& reflectance, const BandResponseSet& bands) {
    std::vector<double> rho(bands.size());
    for (int n = 0; n < bands.size(); ++n) rho[n] = band_average(reflectance, bands[n]);
    return ReflectivityFactors(std::move(rho));
}

namespace {

void check_rho(const std::vector<double>& rho, int bands) {
    if (static_cast<int>(rho.size()) != bands)
        throw InvalidArgument("expected " + std::to_string(bands) + " reflectivity factors, got " +
                              std::to_string(rho.size()));
    for (double r : rho)
        if (!(r > 0.0)) throw InvalidArgument("reflectivity factors must be positive");
}

}  // namespace

MosaicFrame apply_reflectivity_correction(const MosaicFrame& composite, const std::vector<double>& rho) {
    check_rho(rho, composite.layout().band_count());
    MosaicFrame out = composite;
    for (int y = 0; y < out.height(); ++y)
        for (int x = 0; x < out.width(); ++x)
            out.at(y, x) = static_cast<float>(out.at(y, x) / rho[out.layout().band_at(y, x)]);
    return out;
}

Hypercube apply_reflectivity_correction(const Hypercube& composite, const std::vector<double>& rho) {
    check_rho(rho, composite.bands());
    Hypercube out = composite;
    for (std::size_t p = 0; p < out.pixel_count(); ++p) {
        auto s = out.spectrum(p);
        for (int n = 0; n < out.bands(); ++n) s[n] /= rho[n];
    }
    return out;
}

namespace {

constexpr std::size_t kBlock = 4096;

// Unmasked pixel indices of a fit.
struct FitPixels {
    int height = 0, width = 0;
    std::vector<std::size_t> index;
};

FitPixels collect_pixels(const Hypercube& W, const PixelMask& mask) {
    if (mask.height() != W.height() || mask.width() != W.width())
        throw InvalidArgument("mask geometry does not match the reference cube");
    FitPixels px{W.height(), W.width(), {}};
    px.index.reserve(mask.count());
    for (std::size_t p = 0; p < W.pixel_count(); ++p)
        if (mask[p]) px.index.push_back(p);
    if (px.index.empty()) throw InvalidArgument("mask selects no pixels");
    return px;
}

double residual_sum(const Hypercube& W, const FitPixels& px, const std::vector<double>& amp,
                    const auto& vignette) {
    const int N = W.bands();
    return parallel_reduce(
        px.index.size(), kBlock, 0.0,
        [&](std::size_t b, std::size_t e) {
            double acc = 0.0;
            for (std::size_t k = b; k < e; ++k) {
                const std::size_t p = px.index[k];
                const double v = vignette(p);
                auto w = W.spectrum(p);
                for (int n = 0; n < N; ++n) {
                    const double r = amp[n] * v - w[n];
                    acc += r * r;
                }
            }
            return acc;
        },
        [](double& a, double b) { a += b; });
}

// Gaussian parameterized as (mu_i, mu_j, q) with V = exp(-q * r^2 / D^2), D the
// image diagonal, so q stays O(1) for vignetting on the scale of the image.
struct GaussParams {
    double mu_i, mu_j, q;
};

struct GaussEval {
    double diag2;
    double eval(const GaussParams& g, double i, double j) const noexcept {
        const double di = i - g.mu_i, dj = j - g.mu_j;
        return std::exp(-g.q * (di * di + dj * dj) / diag2);
    }
};

GaussianVignetting to_vignetting(const GaussParams& g, double diag) {
    GaussianVignetting v{g.mu_i, g.mu_j, std::numeric_limits<double>::infinity()};
    if (g.q > 0.0) v.sigma = diag / std::sqrt(2.0 * g.q);
    return v;
}

GaussParams from_vignetting(const GaussianVignetting& v, double diag) {
    return {v.mu_i, v.mu_j, std::isfinite(v.sigma) ? diag * diag / (2.0 * v.sigma * v.sigma) : 0.0};
}

// Central-difference steps for the numeric Jacobian of V.
std::array<double, 3> jacobian_steps(const GaussParams& g, double diag) {
    return {1e-6 * diag, 1e-6 * diag, 1e-6 * std::max(std::abs(g.q), 1.0)};
}

// V and its numeric partial derivatives with respect to (mu_i, mu_j, q).
inline double gauss_with_jacobian(const GaussEval& ge, const GaussParams& g, const std::array<double, 3>& h, double i,
                                  double j, double* dv) {
    const double v = ge.eval(g, i, j);
    const GaussParams pi_p{g.mu_i + h[0], g.mu_j, g.q}, pi_m{g.mu_i - h[0], g.mu_j, g.q};
    const GaussParams pj_p{g.mu_i, g.mu_j + h[1], g.q}, pj_m{g.mu_i, g.mu_j - h[1], g.q};
    const GaussParams q_p{g.mu_i, g.mu_j, g.q + h[2]}, q_m{g.mu_i, g.mu_j, g.q - h[2]};
    dv[0] = (ge.eval(pi_p, i, j) - ge.eval(pi_m, i, j)) / (2.0 * h[0]);
    dv[1] = (ge.eval(pj_p, i, j) - ge.eval(pj_m, i, j)) / (2.0 * h[1]);
    dv[2] = (ge.eval(q_p, i, j) - ge.eval(q_m, i, j)) / (2.0 * h[2]);
    return v;
}

double image_diagonal(int height, int width) { return std::hypot(static_cast<double>(height), static_cast<double>(width)); }

bool is_degenerate(const GaussParams& g) {
    // sigma > 10 * diagonal  <=>  q < 1 / 200
    return g.q < 1.0 / 200.0;
}

void finish_gaussian(WhiteReferenceModel& m, const GaussParams& g, double diag) {
    m.V = to_vignetting(g, diag);
    m.degenerate = is_degenerate(g);
}

}  // namespace

GaussianVignetting moment_matched_gaussian(const std::vector<double>& field, int height, int width,
                                           const PixelMask& mask) {
    const double diag = image_diagonal(height, width);
    Eigen::Matrix4d A = Eigen::Matrix4d::Zero();
    Eigen::Vector4d b = Eigen::Vector4d::Zero();
    double wsum = 0.0, ci = 0.0, cj = 0.0;
    for (int i = 0; i < height; ++i) {
        for (int j = 0; j < width; ++j) {
            const std::size_t p = static_cast<std::size_t>(i) * width + j;
            const double f = field[p];
            if (!mask[p] || !(f > 0.0)) continue;
            const double u = i / diag, v = j / diag;
            const Eigen::Vector4d x(1.0, u, v, u * u + v * v);
            const double w = f * f;
            A.noalias() += w * x * x.transpose();
            b.noalias() += w * std::log(f) * x;
            wsum += f;
            ci += f * i;
            cj += f * j;
        }
    }
    if (wsum <= 0.0) throw DegenerateInput("vignetting field has no positive values inside the mask");
    const Eigen::Vector4d c = A.ldlt().solve(b);
    const double q = -c(3);
    if (!(q > 1e-6) || !c.allFinite()) {
        return to_vignetting({ci / wsum, cj / wsum, 1e-3}, diag);
    }
    return to_vignetting({c(1) / (2.0 * q) * diag, c(2) / (2.0 * q) * diag, q}, diag);
}

WhiteReferenceModel fit_nonparametric(const Hypercube& W, const PixelMask& mask) {
    const FitPixels px = collect_pixels(W, mask);
    const int N = W.bands();
    const std::size_t P = W.pixel_count();

    std::vector<double> bandmean(P);
    parallel_for(P, [&](std::size_t b, std::size_t e) {
        for (std::size_t p = b; p < e; ++p) {
            auto s = W.spectrum(p);
            double acc = 0.0;
            for (int n = 0; n < N; ++n) acc += s[n];
            bandmean[p] = acc / N;
        }
    }, 4096);

    double M = -std::numeric_limits<double>::infinity();
    for (std::size_t p : px.index) M = std::max(M, bandmean[p]);
    if (!(M > 0.0)) throw DegenerateInput("white reference is zero (or negative) everywhere inside the mask");

    const std::vector<double> band_sums = parallel_reduce(
        px.index.size(), kBlock, std::vector<double>(N, 0.0),
        [&](std::size_t b, std::size_t e) {
            std::vector<double> acc(N, 0.0);
            for (std::size_t k = b; k < e; ++k) {
                auto s = W.spectrum(px.index[k]);
                for (int n = 0; n < N; ++n) acc[n] += s[n];
            }
            return acc;
        },
        [](std::vector<double>& a, const std::vector<double>& b) {
            for (std::size_t n = 0; n < a.size(); ++n) a[n] += b[n];
        });
    double total = 0.0;
    for (double s : band_sums) total += s;

    WhiteReferenceModel m;
    m.method = FitMethod::nonparametric;
    m.height = W.height();
    m.width = W.width();
    m.M = M;
    m.S.resize(N);
    for (int n = 0; n < N; ++n) m.S[n] = band_sums[n] / (total / N);

    VignettingField field{W.height(), W.width(), std::move(bandmean)};
    for (auto& v : field.values) v /= M;

    std::vector<double> amp(N);
    for (int n = 0; n < N; ++n) amp[n] = M * m.S[n];
    const double cost = residual_sum(W, px, amp, [&](std::size_t p) { return field.values[p]; });
    m.residual_rms = std::sqrt(cost / (static_cast<double>(px.index.size()) * N));
    m.V = std::move(field);
    return m;
}

WhiteReferenceModel fit_nonparametric(const Hypercube& W, const ContentMask& mask) {
    return fit_nonparametric(W, PixelMask::from_content(W.height(), W.width(), mask));
}

WhiteReferenceModel fit_gaussian_joint(const Hypercube& W, const PixelMask& mask,
                                       std::optional<GaussianVignetting> init) {
    const FitPixels px = collect_pixels(W, mask);
    const int N = W.bands();
    const int H = W.height(), Wd = W.width();
    const double diag = image_diagonal(H, Wd);
    const GaussEval ge{diag * diag};

    const WhiteReferenceModel np = fit_nonparametric(W, mask);
    if (!init) init = moment_matched_gaussian(std::get<VignettingField>(np.V).values, H, Wd, mask);

    // Parameter vector: amplitudes A_n = M * S(n), then (mu_i, mu_j, q).
    Eigen::VectorXd start(N + 3);
    for (int n = 0; n < N; ++n) start(n) = np.M * np.S[n];
    const GaussParams g0 = from_vignetting(*init, diag);
    start(N) = g0.mu_i;
    start(N + 1) = g0.mu_j;
    start(N + 2) = g0.q;

    auto unpack = [N](const Eigen::VectorXd& p) {
        std::vector<double> amp(p.data(), p.data() + N);
        return std::pair{amp, GaussParams{p(N), p(N + 1), p(N + 2)}};
    };

    struct Acc {
        double cost = 0.0, vv = 0.0;
        std::array<double, 3> vvk{}, vke{};
        std::array<double, 9> vkvl{};
        std::vector<double> ve;
    };

    NormalEquationProblem problem;
    problem.cost = [&](const Eigen::VectorXd& p) {
        auto [amp, g] = unpack(p);
        return residual_sum(W, px, amp, [&](std::size_t q) { return ge.eval(g, q / Wd, q % Wd); });
    };
    problem.normal = [&](const Eigen::VectorXd& p, Eigen::MatrixXd& JtJ, Eigen::VectorXd& Jte) {
        auto [amp, g] = unpack(p);
        const auto h = jacobian_steps(g, diag);
        Acc init_acc;
        init_acc.ve.assign(N, 0.0);
        const Acc acc = parallel_reduce(
            px.index.size(), kBlock, init_acc,
            [&](std::size_t b, std::size_t e) {
                Acc a;
                a.ve.assign(N, 0.0);
                double dv[3];
                for (std::size_t k = b; k < e; ++k) {
                    const std::size_t pix = px.index[k];
                    const double v = gauss_with_jacobian(ge, g, h, static_cast<double>(pix / Wd),
                                                         static_cast<double>(pix % Wd), dv);
                    auto w = W.spectrum(pix);
                    double s = 0.0;
                    for (int n = 0; n < N; ++n) {
                        const double r = amp[n] * v - w[n];
                        a.cost += r * r;
                        a.ve[n] += v * r;
                        s += amp[n] * r;
                    }
                    a.vv += v * v;
                    for (int x = 0; x < 3; ++x) {
                        a.vvk[x] += v * dv[x];
                        a.vke[x] += dv[x] * s;
                        for (int y = 0; y < 3; ++y) a.vkvl[x * 3 + y] += dv[x] * dv[y];
                    }
                }
                return a;
            },
            [](Acc& a, const Acc& b) {
                a.cost += b.cost;
                a.vv += b.vv;
                for (int x = 0; x < 3; ++x) {
                    a.vvk[x] += b.vvk[x];
                    a.vke[x] += b.vke[x];
                }
                for (int x = 0; x < 9; ++x) a.vkvl[x] += b.vkvl[x];
                for (std::size_t n = 0; n < a.ve.size(); ++n) a.ve[n] += b.ve[n];
            });

        double amp2 = 0.0;
        for (double a : amp) amp2 += a * a;
        JtJ.setZero();
        for (int n = 0; n < N; ++n) {
            JtJ(n, n) = acc.vv;
            for (int x = 0; x < 3; ++x) {
                JtJ(n, N + x) = amp[n] * acc.vvk[x];
                JtJ(N + x, n) = JtJ(n, N + x);
            }
            Jte(n) = acc.ve[n];
        }
        for (int x = 0; x < 3; ++x) {
            for (int y = 0; y < 3; ++y) JtJ(N + x, N + y) = amp2 * acc.vkvl[x * 3 + y];
            Jte(N + x) = acc.vke[x];
        }
        return acc.cost;
    };

    const LmResult res = levenberg_marquardt(problem, start);
    auto [amp, g] = unpack(res.params);

    WhiteReferenceModel m;
    m.method = FitMethod::gaussian_joint;
    m.height = H;
    m.width = Wd;
    double mean = 0.0;
    for (double a : amp) mean += a;
    mean /= N;
    m.M = mean;
    m.S.resize(N);
    for (int n = 0; n < N; ++n) m.S[n] = amp[n] / mean;
    finish_gaussian(m, g, diag);
    m.residual_rms = std::sqrt(res.cost / (static_cast<double>(px.index.size()) * N));
    m.converged = res.converged;
    m.iterations = res.iterations;
    return m;
}

WhiteReferenceModel fit_gaussian_joint(const Hypercube& W, const ContentMask& mask,
                                       std::optional<GaussianVignetting> init) {
    return fit_gaussian_joint(W, PixelMask::from_content(W.height(), W.width(), mask), init);
}

WhiteReferenceModel fit_gaussian_sequential(const Hypercube& W, const PixelMask& mask) {
    const FitPixels px = collect_pixels(W, mask);
    const int N = W.bands();
    const int H = W.height(), Wd = W.width();
    const double diag = image_diagonal(H, Wd);
    const GaussEval ge{diag * diag};

    const WhiteReferenceModel np = fit_nonparametric(W, mask);
    std::vector<double> amp(N);
    double Q = 0.0;
    for (int n = 0; n < N; ++n) {
        amp[n] = np.M * np.S[n];
        Q += amp[n] * amp[n];
    }

    // With amplitudes fixed, sum_n (W_n - a_n V)^2 = Q (V - T)^2 + const per
    // pixel, where T = sum_n a_n W_n / Q. Fitting V to T with weight Q is the
    // same least-squares problem over far fewer residuals.
    std::vector<double> target(px.index.size());
    parallel_for(px.index.size(), [&](std::size_t b, std::size_t e) {
        for (std::size_t k = b; k < e; ++k) {
            auto w = W.spectrum(px.index[k]);
            double acc = 0.0;
            for (int n = 0; n < N; ++n) acc += amp[n] * w[n];
            target[k] = acc / Q;
        }
    }, 4096);

    std::vector<double> target_field(W.pixel_count(), 0.0);
    for (std::size_t k = 0; k < px.index.size(); ++k) target_field[px.index[k]] = target[k];
    const GaussParams g0 = from_vignetting(moment_matched_gaussian(target_field, H, Wd, mask), diag);
    target_field = {};

    Eigen::VectorXd start(3);
    start << g0.mu_i, g0.mu_j, g0.q;

    struct Acc {
        double cost = 0.0;
        std::array<double, 3> vke{};
        std::array<double, 9> vkvl{};
    };

    NormalEquationProblem problem;
    problem.cost = [&](const Eigen::VectorXd& p) {
        const GaussParams g{p(0), p(1), p(2)};
        return Q * parallel_reduce(
                       px.index.size(), kBlock, 0.0,
                       [&](std::size_t b, std::size_t e) {
                           double acc = 0.0;
                           for (std::size_t k = b; k < e; ++k) {
                               const std::size_t pix = px.index[k];
                               const double r = ge.eval(g, pix / Wd, pix % Wd) - target[k];
                               acc += r * r;
                           }
                           return acc;
                       },
                       [](double& a, double b) { a += b; });
    };
    problem.normal = [&](const Eigen::VectorXd& p, Eigen::MatrixXd& JtJ, Eigen::VectorXd& Jte) {
        const GaussParams g{p(0), p(1), p(2)};
        const auto h = jacobian_steps(g, diag);
        const Acc acc = parallel_reduce(
            px.index.size(), kBlock, Acc{},
            [&](std::size_t b, std::size_t e) {
                Acc a;
                double dv[3];
                for (std::size_t k = b; k < e; ++k) {
                    const std::size_t pix = px.index[k];
                    const double v = gauss_with_jacobian(ge, g, h, static_cast<double>(pix / Wd),
                                                         static_cast<double>(pix % Wd), dv);
                    const double r = v - target[k];
                    a.cost += r * r;
                    for (int x = 0; x < 3; ++x) {
                        a.vke[x] += dv[x] * r;
                        for (int y = 0; y < 3; ++y) a.vkvl[x * 3 + y] += dv[x] * dv[y];
                    }
                }
                return a;
            },
            [](Acc& a, const Acc& b) {
                a.cost += b.cost;
                for (int x = 0; x < 3; ++x) a.vke[x] += b.vke[x];
                for (int x = 0; x < 9; ++x) a.vkvl[x] += b.vkvl[x];
            });
        for (int x = 0; x < 3; ++x) {
            for (int y = 0; y < 3; ++y) JtJ(x, y) = Q * acc.vkvl[x * 3 + y];
            Jte(x) = Q * acc.vke[x];
        }
        return Q * acc.cost;
    };

    const LmResult res = levenberg_marquardt(problem, start);
    const GaussParams g{res.params(0), res.params(1), res.params(2)};

    WhiteReferenceModel m;
    m.method = FitMethod::gaussian_sequential;
    m.height = H;
    m.width = Wd;
    m.M = np.M;
    m.S = np.S;
    finish_gaussian(m, g, diag);
    const double cost = residual_sum(W, px, amp, [&](std::size_t q) { return ge.eval(g, q / Wd, q % Wd); });
    m.residual_rms = std::sqrt(cost / (static_cast<double>(px.index.size()) * N));
    m.converged = res.converged;
    m.iterations = res.iterations;
    return m;
}

WhiteReferenceModel fit_gaussian_sequential(const Hypercube& W, const ContentMask& mask) {
    return fit_gaussian_sequential(W, PixelMask::from_content(W.height(), W.width(), mask));
}

WhiteReferenceModel fit_model(FitMethod method, const Hypercube& W, const PixelMask& mask) {
    switch (method) {
        case FitMethod::nonparametric: return fit_nonparametric(W, mask);
        case FitMethod::gaussian_joint: return fit_gaussian_joint(W, mask);
        case FitMethod::gaussian_sequential: return fit_gaussian_sequential(W, mask);
    }
    throw InvalidArgument("unknown fit method");
}

namespace {

ContentMask detect_from_intensity(const std::vector<double>& img, int H, int W, double shrink) {
    const double total = static_cast<double>(img.size());
    auto full_frame = [&] {
        ContentMask m((W - 1) / 2.0, (H - 1) / 2.0, std::sqrt(total / M_PI), shrink);
        m.full_frame = true;
        return m;
    };
    double thr;
    try {
        thr = otsu_threshold(img);
    } catch (const DegenerateInput&) {
        if (img.front() > 0.0) return full_frame();
        throw DetectionError("image is uniformly dark; supply the content area manually");
    }
    double area = 0.0, si = 0.0, sj = 0.0;
    for (int i = 0; i < H; ++i) {
        for (int j = 0; j < W; ++j) {
            if (img[static_cast<std::size_t>(i) * W + j] >= thr) {
                area += 1.0;
                si += i;
                sj += j;
            }
        }
    }
    if (area < 0.01 * total)
        throw DetectionError("bright area covers " + std::to_string(100.0 * area / total) +
                             "% of the image; supply the content area manually");
    if (area >= 0.99 * total) return full_frame();
    return ContentMask(sj / area, si / area, std::sqrt(area / M_PI), shrink);
}

}  // namespace

ContentMask detect_content_circle(const Hypercube& cube, double shrink_factor) {
    std::vector<double> img(cube.pixel_count());
    for (std::size_t p = 0; p < img.size(); ++p) {
        double acc = 0.0;
        for (double v : cube.spectrum(p)) acc += v;
        img[p] = acc / cube.bands();
    }
    return detect_from_intensity(img, cube.height(), cube.width(), shrink_factor);
}

ContentMask detect_content_circle(const MosaicFrame& frame, double shrink_factor) {
    // Band mean per pattern cell, spread back over the cell.
    const int H = frame.height(), W = frame.width();
    const int pr = frame.layout().rows(), pc = frame.layout().cols();
    std::vector<double> img(static_cast<std::size_t>(H) * W);
    for (int by = 0; by < H; by += pr) {
        for (int bx = 0; bx < W; bx += pc) {
            double acc = 0.0;
            for (int y = by; y < by + pr; ++y)
                for (int x = bx; x < bx + pc; ++x) acc += frame.at(y, x);
            acc /= pr * pc;
            for (int y = by; y < by + pr; ++y)
                for (int x = bx; x < bx + pc; ++x) img[static_cast<std::size_t>(y) * W + x] = acc;
        }
    }
    return detect_from_intensity(img, H, W, shrink_factor);
}

Hypercube render_reference(const WhiteReferenceModel& model, int height, int width,
                           const std::optional<ContentMask>& mask) {
    const int N = model.bands();
    if (N == 0) throw InvalidArgument("model has no bands");
    if (const auto* f = std::get_if<VignettingField>(&model.V))
        if (f->height != height || f->width != width)
            throw InvalidArgument("non-parametric vignetting geometry does not match the requested size");
    Hypercube cube(height, width, N);
    parallel_for(static_cast<std::size_t>(height), [&](std::size_t i0, std::size_t i1) {
        for (std::size_t i = i0; i < i1; ++i) {
            for (int j = 0; j < width; ++j) {
                if (mask && !mask->contains(static_cast<int>(i), j)) continue;
                const double mv = model.M * model.vignetting(static_cast<int>(i), j);
                auto s = cube.spectrum(static_cast<int>(i), j);
                for (int n = 0; n < N; ++n) s[n] = mv * model.S[n];
            }
        }
    }, 8);
    return cube;
}

namespace {

std::string num(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

}  // namespace

void save_model(const std::filesystem::path& path, const WhiteReferenceModel& model,
                const std::optional<ContentMask>& mask) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    out << "# Separable white reference W(i,j,n) = M * S(n) * V(i,j)\n"
           "# M: scalar factor in counts. S_n: spectral sensitivities, mean 1.\n"
           "# Gaussian V: exp(-((i-mu_i)^2 + (j-mu_j)^2) / (2 sigma^2)), pixels.\n"
           "# Non-parametric V: v_cube names an HSIC file (H x W x 1) relative to this file.\n"
           "# mask_*: content disk (cx = column, cy = row) and radius shrink factor.\n";
    out << "key,value\n";
    out << "method," << to_string(model.method) << '\n';
    out << "height," << model.height << '\n';
    out << "width," << model.width << '\n';
    out << "M," << num(model.M) << '\n';
    for (int n = 0; n < model.bands(); ++n) out << "S_" << n << ',' << num(model.S[n]) << '\n';
    if (const auto* g = std::get_if<GaussianVignetting>(&model.V)) {
        out << "mu_i," << num(g->mu_i) << '\n';
        out << "mu_j," << num(g->mu_j) << '\n';
        out << "sigma," << num(g->sigma) << '\n';
    } else {
        const auto& f = std::get<VignettingField>(model.V);
        auto vpath = path;
        vpath.replace_extension(".vignetting.hsic");
        Hypercube vc(f.height, f.width, 1, CubeKind::intensity, {}, f.values);
        write_cube(vpath, vc);
        out << "v_cube," << vpath.filename().string() << '\n';
    }
    out << "residual_rms," << num(model.residual_rms) << '\n';
    out << "converged," << (model.converged ? 1 : 0) << '\n';
    out << "degenerate," << (model.degenerate ? 1 : 0) << '\n';
    out << "iterations," << model.iterations << '\n';
    if (mask) {
        out << "mask_cx," << num(mask->cx) << '\n';
        out << "mask_cy," << num(mask->cy) << '\n';
        out << "mask_radius," << num(mask->radius) << '\n';
        out << "mask_shrink," << num(mask->shrink_factor) << '\n';
    }
    if (!out) throw Error("write failure on " + path.string());
}

StoredModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string(), 0);
    std::map<std::string, std::pair<std::string, std::size_t>> kv;
    std::string line;
    std::size_t number = 0;
    bool header = false;
    while (std::getline(in, line)) {
        ++number;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        if (!header) {
            if (line != "key,value") throw ParseError("expected header 'key,value'", number);
            header = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw ParseError("expected key,value", number);
        kv[line.substr(0, comma)] = {line.substr(comma + 1), number};
    }
    auto get = [&](const std::string& key) -> const std::pair<std::string, std::size_t>& {
        auto it = kv.find(key);
        if (it == kv.end()) throw ParseError("model file lacks '" + key + "'", number);
        return it->second;
    };
    auto getd = [&](const std::string& key) {
        const auto& [s, ln] = get(key);
        double v = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("invalid number for " + key, ln);
        return v;
    };

    StoredModel sm;
    WhiteReferenceModel& m = sm.model;
    m.method = parse_fit_method(get("method").first);
    m.height = static_cast<int>(getd("height"));
    m.width = static_cast<int>(getd("width"));
    m.M = getd("M");
    for (int n = 0; kv.count("S_" + std::to_string(n)); ++n) m.S.push_back(getd("S_" + std::to_string(n)));
    if (m.S.empty()) throw ParseError("model file has no S_n rows", number);
    if (kv.count("v_cube")) {
        const Hypercube vc = read_cube(path.parent_path() / get("v_cube").first);
        if (vc.bands() != 1) throw ParseError("vignetting cube must have one band", get("v_cube").second);
        m.V = VignettingField{vc.height(), vc.width(), std::vector<double>(vc.data().begin(), vc.data().end())};
    } else {
        m.V = GaussianVignetting{getd("mu_i"), getd("mu_j"), getd("sigma")};
    }
    if (kv.count("residual_rms")) m.residual_rms = getd("residual_rms");
    if (kv.count("converged")) m.converged = getd("converged") != 0.0;
    if (kv.count("degenerate")) m.degenerate = getd("degenerate") != 0.0;
    if (kv.count("iterations")) m.iterations = static_cast<int>(getd("iterations"));
    if (kv.count("mask_cx"))
        sm.mask = ContentMask(getd("mask_cx"), getd("mask_cy"), getd("mask_radius"), getd("mask_shrink"));
    return sm;
}

}  // namespace hsical
