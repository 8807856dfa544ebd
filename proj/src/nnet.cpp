#include "crowdtrack/nnet.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace crowdtrack::nnet {

namespace {

NodePtr make_node(Shape s, std::vector<NodePtr> parents) {
    auto n = std::make_shared<Node>(s);
    n->parents = std::move(parents);
    return n;
}

void require(bool cond, const char* msg) {
    if (!cond) {
        throw std::invalid_argument(msg);
    }
}

}  // namespace

Value Value::leaf(Shape s, std::vector<double> data) {
    require(static_cast<int>(data.size()) == s.size(), "leaf: data size mismatch");
    auto n = std::make_shared<Node>(s);
    n->data = std::move(data);
    return Value(n);
}

Value Value::zeros(Shape s) { return Value(std::make_shared<Node>(s)); }

Value Value::scalar(double v) { return leaf({1, 1, 1}, {v}); }

Value add(const Value& a, const Value& b) {
    require(a.shape() == b.shape(), "add: shape mismatch");
    auto n = make_node(a.shape(), {a.node(), b.node()});
    for (size_t i = 0; i < n->data.size(); ++i) {
        n->data[i] = a.data()[i] + b.data()[i];
    }
    n->backprop = [](Node& self) {
        for (size_t i = 0; i < self.data.size(); ++i) {
            self.parents[0]->grad[i] += self.grad[i];
            self.parents[1]->grad[i] += self.grad[i];
        }
    };
    return Value(n);
}

Value sub(const Value& a, const Value& b) {
    require(a.shape() == b.shape(), "sub: shape mismatch");
    auto n = make_node(a.shape(), {a.node(), b.node()});
    for (size_t i = 0; i < n->data.size(); ++i) {
        n->data[i] = a.data()[i] - b.data()[i];
    }
    n->backprop = [](Node& self) {
        for (size_t i = 0; i < self.data.size(); ++i) {
            self.parents[0]->grad[i] += self.grad[i];
            self.parents[1]->grad[i] -= self.grad[i];
        }
    };
    return Value(n);
}

Value mul(const Value& a, const Value& b) {
    require(a.shape() == b.shape(), "mul: shape mismatch");
    auto n = make_node(a.shape(), {a.node(), b.node()});
    for (size_t i = 0; i < n->data.size(); ++i) {
        n->data[i] = a.data()[i] * b.data()[i];
    }
    n->backprop = [](Node& self) {
        for (size_t i = 0; i < self.data.size(); ++i) {
            self.parents[0]->grad[i] += self.grad[i] * self.parents[1]->data[i];
            self.parents[1]->grad[i] += self.grad[i] * self.parents[0]->data[i];
        }
    };
    return Value(n);
}

Value add_rowvec(const Value& x, const Value& b) {
    require(b.rows() == 1 && b.cols() == x.cols(), "add_rowvec: bad bias shape");
    auto n = make_node(x.shape(), {x.node(), b.node()});
    const int C = x.cols();
    for (int r = 0; r < x.rows(); ++r) {
        for (int c = 0; c < C; ++c) {
            n->data[r * C + c] = x.data()[r * C + c] + b.data()[c];
        }
    }
    n->backprop = [C](Node& self) {
        const int R = self.shape.rows;
        for (int r = 0; r < R; ++r) {
            for (int c = 0; c < C; ++c) {
                self.parents[0]->grad[r * C + c] += self.grad[r * C + c];
                self.parents[1]->grad[c] += self.grad[r * C + c];
            }
        }
    };
    return Value(n);
}

Value matmul(const Value& a, const Value& b) {
    require(a.cols() == b.rows(), "matmul: inner dims mismatch");
    const int M = a.rows(), K = a.cols(), N = b.cols();
    auto n = make_node({1, M, N}, {a.node(), b.node()});
    for (int m = 0; m < M; ++m) {
        for (int k = 0; k < K; ++k) {
            const double av = a.data()[m * K + k];
            for (int c = 0; c < N; ++c) {
                n->data[m * N + c] += av * b.data()[k * N + c];
            }
        }
    }
    n->backprop = [M, K, N](Node& self) {
        auto& da = self.parents[0]->grad;
        auto& db = self.parents[1]->grad;
        const auto& ad = self.parents[0]->data;
        const auto& bd = self.parents[1]->data;
        for (int m = 0; m < M; ++m) {
            for (int c = 0; c < N; ++c) {
                const double g = self.grad[m * N + c];
                if (g == 0.0) continue;
                for (int k = 0; k < K; ++k) {
                    da[m * K + k] += g * bd[k * N + c];
                    db[k * N + c] += g * ad[m * K + k];
                }
            }
        }
    };
    return Value(n);
}

Value matmul_nt(const Value& a, const Value& b) {
    require(a.cols() == b.cols(), "matmul_nt: inner dims mismatch");
    const int M = a.rows(), K = a.cols(), N = b.rows();
    auto n = make_node({1, M, N}, {a.node(), b.node()});
    for (int m = 0; m < M; ++m) {
        for (int c = 0; c < N; ++c) {
            double acc = 0.0;
            for (int k = 0; k < K; ++k) {
                acc += a.data()[m * K + k] * b.data()[c * K + k];
            }
            n->data[m * N + c] = acc;
        }
    }
    n->backprop = [M, K, N](Node& self) {
        auto& da = self.parents[0]->grad;
        auto& db = self.parents[1]->grad;
        const auto& ad = self.parents[0]->data;
        const auto& bd = self.parents[1]->data;
        for (int m = 0; m < M; ++m) {
            for (int c = 0; c < N; ++c) {
                const double g = self.grad[m * N + c];
                if (g == 0.0) continue;
                for (int k = 0; k < K; ++k) {
                    da[m * K + k] += g * bd[c * K + k];
                    db[c * K + k] += g * ad[m * K + k];
                }
            }
        }
    };
    return Value(n);
}

Value scale(const Value& x, double c) {
    auto n = make_node(x.shape(), {x.node()});
    for (size_t i = 0; i < n->data.size(); ++i) {
        n->data[i] = x.data()[i] * c;
    }
    n->backprop = [c](Node& self) {
        for (size_t i = 0; i < self.data.size(); ++i) {
            self.parents[0]->grad[i] += self.grad[i] * c;
        }
    };
    return Value(n);
}

Value add_const(const Value& x, const std::vector<double>& c) {
    require(c.size() == x.data().size(), "add_const: size mismatch");
    auto n = make_node(x.shape(), {x.node()});
    for (size_t i = 0; i < n->data.size(); ++i) {
        n->data[i] = x.data()[i] + c[i];
    }
    n->backprop = [](Node& self) {
        for (size_t i = 0; i < self.data.size(); ++i) {
            self.parents[0]->grad[i] += self.grad[i];
        }
    };
    return Value(n);
}

Value mul_const(const Value& x, const std::vector<double>& c) {
    require(c.size() == x.data().size(), "mul_const: size mismatch");
    auto n = make_node(x.shape(), {x.node()});
    for (size_t i = 0; i < n->data.size(); ++i) {
        n->data[i] = x.data()[i] * c[i];
    }
    n->backprop = [c](Node& self) {
        for (size_t i = 0; i < self.data.size(); ++i) {
            self.parents[0]->grad[i] += self.grad[i] * c[i];
        }
    };
    return Value(n);
}

Value mul_rowvec_const(const Value& x, const std::vector<double>& v) {
    require(static_cast<int>(v.size()) == x.cols(), "mul_rowvec_const: size mismatch");
    auto n = make_node(x.shape(), {x.node()});
    const int C = x.cols();
    for (int r = 0; r < x.rows(); ++r) {
        for (int c = 0; c < C; ++c) {
            n->data[r * C + c] = x.data()[r * C + c] * v[c];
        }
    }
    n->backprop = [v, C](Node& self) {
        for (int r = 0; r < self.shape.rows; ++r) {
            for (int c = 0; c < C; ++c) {
                self.parents[0]->grad[r * C + c] += self.grad[r * C + c] * v[c];
            }
        }
    };
    return Value(n);
}

Value linear(const Value& x, const Value& w, const Value& b) {
    return add_rowvec(matmul(x, w), b);
}

Value softmax_rows(const Value& x, double sc) {
    require(sc > 0.0, "softmax_rows: scale must be positive");
    auto n = make_node(x.shape(), {x.node()});
    const int R = x.rows(), C = x.cols();
    for (int r = 0; r < R; ++r) {
        double mx = -1e300;
        for (int c = 0; c < C; ++c) {
            mx = std::max(mx, x.data()[r * C + c] / sc);
        }
        double sum = 0.0;
        for (int c = 0; c < C; ++c) {
            const double e = std::exp(x.data()[r * C + c] / sc - mx);
            n->data[r * C + c] = e;
            sum += e;
        }
        for (int c = 0; c < C; ++c) {
            n->data[r * C + c] /= sum;
        }
    }
    n->backprop = [sc, C](Node& self) {
        for (int r = 0; r < self.shape.rows; ++r) {
            double dot = 0.0;
            for (int c = 0; c < C; ++c) {
                dot += self.grad[r * C + c] * self.data[r * C + c];
            }
            for (int c = 0; c < C; ++c) {
                self.parents[0]->grad[r * C + c] +=
                    self.data[r * C + c] * (self.grad[r * C + c] - dot) / sc;
            }
        }
    };
    return Value(n);
}

Value prelu(const Value& x, const Value& slope) {
    require(slope.shape().size() == 1, "prelu: slope must be scalar");
    auto n = make_node(x.shape(), {x.node(), slope.node()});
    const double a = slope.data()[0];
    for (size_t i = 0; i < n->data.size(); ++i) {
        const double v = x.data()[i];
        n->data[i] = v >= 0.0 ? v : a * v;
    }
    n->backprop = [](Node& self) {
        const double a = self.parents[1]->data[0];
        for (size_t i = 0; i < self.data.size(); ++i) {
            const double v = self.parents[0]->data[i];
            if (v >= 0.0) {
                self.parents[0]->grad[i] += self.grad[i];
            } else {
                self.parents[0]->grad[i] += self.grad[i] * a;
                self.parents[1]->grad[0] += self.grad[i] * v;
            }
        }
    };
    return Value(n);
}

Value sigmoid(const Value& x) {
    auto n = make_node(x.shape(), {x.node()});
    for (size_t i = 0; i < n->data.size(); ++i) {
        n->data[i] = 1.0 / (1.0 + std::exp(-x.data()[i]));
    }
    n->backprop = [](Node& self) {
        for (size_t i = 0; i < self.data.size(); ++i) {
            const double y = self.data[i];
            self.parents[0]->grad[i] += self.grad[i] * y * (1.0 - y);
        }
    };
    return Value(n);
}

Value log_elem(const Value& x) {
    auto n = make_node(x.shape(), {x.node()});
    for (size_t i = 0; i < n->data.size(); ++i) {
        require(x.data()[i] > 0.0, "log: non-positive input");
        n->data[i] = std::log(x.data()[i]);
    }
    n->backprop = [](Node& self) {
        for (size_t i = 0; i < self.data.size(); ++i) {
            self.parents[0]->grad[i] += self.grad[i] / self.parents[0]->data[i];
        }
    };
    return Value(n);
}

Value clamp(const Value& x, double lo, double hi) {
    auto n = make_node(x.shape(), {x.node()});
    for (size_t i = 0; i < n->data.size(); ++i) {
        n->data[i] = std::min(std::max(x.data()[i], lo), hi);
    }
    n->backprop = [lo, hi](Node& self) {
        for (size_t i = 0; i < self.data.size(); ++i) {
            const double v = self.parents[0]->data[i];
            if (v > lo && v < hi) {
                self.parents[0]->grad[i] += self.grad[i];
            }
        }
    };
    return Value(n);
}

Value clamp_min_cols(const Value& x, const std::vector<int>& cols, double lo) {
    auto n = make_node(x.shape(), {x.node()});
    n->data = x.data();
    std::vector<char> sel(x.cols(), 0);
    for (int c : cols) sel[c] = 1;
    const int C = x.cols();
    for (int r = 0; r < x.rows(); ++r) {
        for (int c = 0; c < C; ++c) {
            if (sel[c] && n->data[r * C + c] < lo) {
                n->data[r * C + c] = lo;
            }
        }
    }
    n->backprop = [sel, lo, C](Node& self) {
        for (int r = 0; r < self.shape.rows; ++r) {
            for (int c = 0; c < C; ++c) {
                const double v = self.parents[0]->data[r * C + c];
                if (!sel[c] || v > lo) {
                    self.parents[0]->grad[r * C + c] += self.grad[r * C + c];
                }
            }
        }
    };
    return Value(n);
}

Value conv_asym(const Value& x, const Value& kernel, ConvAxis axis) {
    const int kappa = kernel.shape().size();
    require(kappa % 2 == 1, "conv_asym: kernel width must be odd");
    const int half = (kappa - 1) / 2;
    const int R = x.rows(), C = x.cols();
    auto n = make_node(x.shape(), {x.node(), kernel.node()});
    const bool along_cols = axis == ConvAxis::kCols;
    for (int r = 0; r < R; ++r) {
        for (int c = 0; c < C; ++c) {
            double acc = 0.0;
            for (int k = 0; k < kappa; ++k) {
                const int rr = along_cols ? r : r + k - half;
                const int cc = along_cols ? c + k - half : c;
                if (rr < 0 || rr >= R || cc < 0 || cc >= C) continue;
                acc += x.data()[rr * C + cc] * kernel.data()[k];
            }
            n->data[r * C + c] = acc;
        }
    }
    n->backprop = [kappa, half, R, C, along_cols](Node& self) {
        auto& dx = self.parents[0]->grad;
        auto& dk = self.parents[1]->grad;
        const auto& xd = self.parents[0]->data;
        const auto& kd = self.parents[1]->data;
        for (int r = 0; r < R; ++r) {
            for (int c = 0; c < C; ++c) {
                const double g = self.grad[r * C + c];
                if (g == 0.0) continue;
                for (int k = 0; k < kappa; ++k) {
                    const int rr = along_cols ? r : r + k - half;
                    const int cc = along_cols ? c + k - half : c;
                    if (rr < 0 || rr >= R || cc < 0 || cc >= C) continue;
                    dx[rr * C + cc] += g * kd[k];
                    dk[k] += g * xd[rr * C + cc];
                }
            }
        }
    };
    return Value(n);
}

Value conv_time(const Value& x, const Value& kernel) {
    const Shape ks = kernel.shape();
    const int kappa = ks.depth, cin = ks.rows, cout = ks.cols;
    require(kappa % 2 == 1, "conv_time: kernel width must be odd");
    require(x.cols() == cin, "conv_time: channel mismatch");
    const int half = (kappa - 1) / 2;
    const int T = x.rows();
    auto n = make_node({1, T, cout}, {x.node(), kernel.node()});
    for (int t = 0; t < T; ++t) {
        for (int k = 0; k < kappa; ++k) {
            const int tt = t + k - half;
            if (tt < 0 || tt >= T) continue;
            for (int i = 0; i < cin; ++i) {
                const double xv = x.data()[tt * cin + i];
                if (xv == 0.0) continue;
                const double* kslice = kernel.data().data() + (k * cin + i) * cout;
                for (int o = 0; o < cout; ++o) {
                    n->data[t * cout + o] += xv * kslice[o];
                }
            }
        }
    }
    n->backprop = [kappa, half, T, cin, cout](Node& self) {
        auto& dx = self.parents[0]->grad;
        auto& dk = self.parents[1]->grad;
        const auto& xd = self.parents[0]->data;
        const auto& kd = self.parents[1]->data;
        for (int t = 0; t < T; ++t) {
            for (int k = 0; k < kappa; ++k) {
                const int tt = t + k - half;
                if (tt < 0 || tt >= T) continue;
                for (int i = 0; i < cin; ++i) {
                    const double xv = xd[tt * cin + i];
                    double acc = 0.0;
                    for (int o = 0; o < cout; ++o) {
                        const double g = self.grad[t * cout + o];
                        acc += g * kd[(k * cin + i) * cout + o];
                        dk[(k * cin + i) * cout + o] += g * xv;
                    }
                    dx[tt * cin + i] += acc;
                }
            }
        }
    };
    return Value(n);
}

Value pool_mean(const Value& x) {
    require(x.rows() > 0, "pool_mean: empty input");
    const int R = x.rows(), C = x.cols();
    auto n = make_node({1, 1, C}, {x.node()});
    for (int r = 0; r < R; ++r) {
        for (int c = 0; c < C; ++c) {
            n->data[c] += x.data()[r * C + c];
        }
    }
    for (int c = 0; c < C; ++c) {
        n->data[c] /= R;
    }
    n->backprop = [R, C](Node& self) {
        for (int r = 0; r < R; ++r) {
            for (int c = 0; c < C; ++c) {
                self.parents[0]->grad[r * C + c] += self.grad[c] / R;
            }
        }
    };
    return Value(n);
}

Value sum_all(const Value& x) {
    auto n = make_node({1, 1, 1}, {x.node()});
    for (double v : x.data()) {
        n->data[0] += v;
    }
    n->backprop = [](Node& self) {
        for (auto& g : self.parents[0]->grad) {
            g += self.grad[0];
        }
    };
    return Value(n);
}

Value mean_all(const Value& x) {
    require(!x.data().empty(), "mean_all: empty input");
    const double inv = 1.0 / static_cast<double>(x.data().size());
    auto n = make_node({1, 1, 1}, {x.node()});
    for (double v : x.data()) {
        n->data[0] += v;
    }
    n->data[0] *= inv;
    n->backprop = [inv](Node& self) {
        for (auto& g : self.parents[0]->grad) {
            g += self.grad[0] * inv;
        }
    };
    return Value(n);
}

Value concat_rows(const std::vector<Value>& xs) {
    require(!xs.empty(), "concat_rows: empty list");
    const int C = xs.front().cols();
    int R = 0;
    std::vector<NodePtr> parents;
    for (const auto& x : xs) {
        require(x.cols() == C, "concat_rows: column mismatch");
        R += x.rows();
        parents.push_back(x.node());
    }
    auto n = make_node({1, R, C}, std::move(parents));
    int row = 0;
    for (const auto& x : xs) {
        std::copy(x.data().begin(), x.data().end(), n->data.begin() + row * C);
        row += x.rows();
    }
    n->backprop = [C](Node& self) {
        int row = 0;
        for (auto& p : self.parents) {
            for (int i = 0; i < p->shape.rows * C; ++i) {
                p->grad[i] += self.grad[row * C + i];
            }
            row += p->shape.rows;
        }
    };
    return Value(n);
}

Value concat_cols(const Value& a, const Value& b) {
    require(a.rows() == b.rows(), "concat_cols: row mismatch");
    const int R = a.rows(), Ca = a.cols(), Cb = b.cols();
    auto n = make_node({1, R, Ca + Cb}, {a.node(), b.node()});
    for (int r = 0; r < R; ++r) {
        for (int c = 0; c < Ca; ++c) {
            n->data[r * (Ca + Cb) + c] = a.data()[r * Ca + c];
        }
        for (int c = 0; c < Cb; ++c) {
            n->data[r * (Ca + Cb) + Ca + c] = b.data()[r * Cb + c];
        }
    }
    n->backprop = [R, Ca, Cb](Node& self) {
        for (int r = 0; r < R; ++r) {
            for (int c = 0; c < Ca; ++c) {
                self.parents[0]->grad[r * Ca + c] += self.grad[r * (Ca + Cb) + c];
            }
            for (int c = 0; c < Cb; ++c) {
                self.parents[1]->grad[r * Cb + c] += self.grad[r * (Ca + Cb) + Ca + c];
            }
        }
    };
    return Value(n);
}

Value tile_rows(const Value& x, int times) {
    require(times >= 0, "tile_rows: negative count");
    const int S = x.rows(), C = x.cols();
    auto n = make_node({1, S * times, C}, {x.node()});
    for (int s = 0; s < S; ++s) {
        for (int t = 0; t < times; ++t) {
            std::copy(x.data().begin() + s * C, x.data().begin() + (s + 1) * C,
                      n->data.begin() + (s * times + t) * C);
        }
    }
    n->backprop = [S, C, times](Node& self) {
        for (int s = 0; s < S; ++s) {
            for (int t = 0; t < times; ++t) {
                for (int c = 0; c < C; ++c) {
                    self.parents[0]->grad[s * C + c] +=
                        self.grad[(s * times + t) * C + c];
                }
            }
        }
    };
    return Value(n);
}

Value div_rows(const Value& x, const Value& s) {
    require(s.rows() == x.rows() && s.cols() == 1, "div_rows: divisor must be Mx1");
    const int R = x.rows(), C = x.cols();
    auto n = make_node(x.shape(), {x.node(), s.node()});
    for (int r = 0; r < R; ++r) {
        for (int c = 0; c < C; ++c) {
            n->data[r * C + c] = x.data()[r * C + c] / s.data()[r];
        }
    }
    n->backprop = [R, C](Node& self) {
        const auto& sd = self.parents[1]->data;
        for (int r = 0; r < R; ++r) {
            double acc = 0.0;
            for (int c = 0; c < C; ++c) {
                const double g = self.grad[r * C + c];
                self.parents[0]->grad[r * C + c] += g / sd[r];
                acc += g * self.data[r * C + c];
            }
            self.parents[1]->grad[r] -= acc / sd[r];
        }
    };
    return Value(n);
}

Value iou_rows(const Value& pred, const std::vector<double>& ref_boxes) {
    const int M = pred.rows();
    require(pred.cols() == 4, "iou_rows: pred must be Mx4");
    require(static_cast<int>(ref_boxes.size()) == 4 * M, "iou_rows: ref size mismatch");
    auto n = make_node({1, M, 1}, {pred.node()});
    for (int i = 0; i < M; ++i) {
        const double* p = pred.data().data() + 4 * i;
        const double* q = ref_boxes.data() + 4 * i;
        const double ar = p[0] + 0.5 * p[2], al = p[0] - 0.5 * p[2];
        const double ab = p[1] + 0.5 * p[3], at = p[1] - 0.5 * p[3];
        const double br = q[0] + 0.5 * q[2], bl = q[0] - 0.5 * q[2];
        const double bb = q[1] + 0.5 * q[3], bt = q[1] - 0.5 * q[3];
        const double ox = std::min(ar, br) - std::max(al, bl);
        const double oy = std::min(ab, bb) - std::max(at, bt);
        if (p[2] <= 0.0 || p[3] <= 0.0 || ox <= 0.0 || oy <= 0.0) {
            n->data[i] = 0.0;
            continue;
        }
        const double inter = ox * oy;
        n->data[i] = inter / (p[2] * p[3] + q[2] * q[3] - inter);
    }
    n->backprop = [M, ref_boxes](Node& self) {
        for (int i = 0; i < M; ++i) {
            const double g = self.grad[i];
            if (g == 0.0) continue;
            const double* p = self.parents[0]->data.data() + 4 * i;
            const double* q = ref_boxes.data() + 4 * i;
            const double ar = p[0] + 0.5 * p[2], al = p[0] - 0.5 * p[2];
            const double ab = p[1] + 0.5 * p[3], at = p[1] - 0.5 * p[3];
            const double br = q[0] + 0.5 * q[2], bl = q[0] - 0.5 * q[2];
            const double bb = q[1] + 0.5 * q[3], bt = q[1] - 0.5 * q[3];
            const double ox = std::min(ar, br) - std::max(al, bl);
            const double oy = std::min(ab, bb) - std::max(at, bt);
            if (p[2] <= 0.0 || p[3] <= 0.0 || ox <= 0.0 || oy <= 0.0) continue;
            const double inter = ox * oy;
            const double uni = p[2] * p[3] + q[2] * q[3] - inter;
            const double common = g / (uni * uni);
            // subgradients of min/max pick the pred side on strict comparison
            const double dox_dx = (ar < br ? 1.0 : 0.0) - (al > bl ? 1.0 : 0.0);
            const double dox_dw = (ar < br ? 0.5 : 0.0) + (al > bl ? 0.5 : 0.0);
            const double doy_dy = (ab < bb ? 1.0 : 0.0) - (at > bt ? 1.0 : 0.0);
            const double doy_dh = (ab < bb ? 0.5 : 0.0) + (at > bt ? 0.5 : 0.0);
            const double k = (uni + inter);
            double* dp = self.parents[0]->grad.data() + 4 * i;
            dp[0] += common * k * oy * dox_dx;
            dp[1] += common * k * ox * doy_dy;
            dp[2] += common * (k * oy * dox_dw - inter * p[3]);
            dp[3] += common * (k * ox * doy_dh - inter * p[2]);
        }
    };
    return Value(n);
}

void backward(const Value& loss) {
    require(loss.defined() && loss.shape().size() == 1,
            "backward: loss must be a scalar");
    std::vector<Node*> order;
    std::unordered_set<Node*> seen;
    // iterative post-order DFS
    std::vector<std::pair<Node*, size_t>> stack{{loss.node().get(), 0}};
    seen.insert(loss.node().get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            Node* parent = node->parents[idx].get();
            ++idx;
            if (seen.insert(parent).second) {
                stack.emplace_back(parent, 0);
            }
        } else {
            order.push_back(node);
            stack.pop_back();
        }
    }
    loss.node()->grad[0] = 1.0;
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->backprop) {
            (*it)->backprop(**it);
        }
    }
}

// ---- parameters ----

Value Params::add(const std::string& name, Value v) {
    require(!items_.contains(name), "Params: duplicate name");
    items_.emplace(name, v);
    return v;
}

Value Params::get(const std::string& name) const {
    auto it = items_.find(name);
    require(it != items_.end(), "Params: unknown name");
    return it->second;
}

bool Params::contains(const std::string& name) const { return items_.contains(name); }

void Params::merge_from(const Params& other) {
    for (const auto& [name, v] : other.items()) {
        add(name, v);
    }
}

void Params::zero_grad() {
    for (auto& [name, v] : items_) {
        v.zero_grad();
    }
}

int Params::total_size() const {
    int n = 0;
    for (const auto& [name, v] : items_) {
        n += v.shape().size();
    }
    return n;
}

Value init_uniform(Shape s, int fan_in, std::mt19937_64& rng, double gain) {
    const double limit = gain * std::sqrt(1.0 / fan_in);
    std::uniform_real_distribution<double> dist(-limit, limit);
    std::vector<double> data(s.size());
    for (auto& v : data) {
        v = dist(rng);
    }
    return Value::leaf(s, std::move(data));
}

void SgdOptimizer::step(Params& params) {
    for (auto& [name, v] : params.items()) {
        auto& vel = velocity_[name];
        if (vel.empty()) {
            vel.assign(v.data().size(), 0.0);
        }
        auto& data = const_cast<Value&>(v).data();
        const auto& grad = v.grad();
        for (size_t i = 0; i < data.size(); ++i) {
            vel[i] = momentum_ * vel[i] - lr_ * grad[i];
            data[i] += vel[i];
        }
    }
}

double grad_check(const std::function<Value()>& loss_fn, Params& params, double eps) {
    params.zero_grad();
    Value loss = loss_fn();
    backward(loss);

    std::map<std::string, std::vector<double>> analytic;
    for (const auto& [name, v] : params.items()) {
        analytic[name] = v.grad();
    }

    // Three step sizes per coordinate: the small step resolves high-curvature
    // coordinates, the larger ones lift weak- and flat-dependence coordinates
    // above the double-precision noise floor. A wrong gradient disagrees with
    // all of them.
    const double steps[3] = {eps, 100.0 * eps, std::min(1e-2, 10000.0 * eps)};
    double max_rel = 0.0;
    for (auto& [name, v] : params.items()) {
        auto& data = const_cast<Value&>(v).data();
        for (size_t i = 0; i < data.size(); ++i) {
            const double saved = data[i];
            const double a = analytic[name][i];
            double best = 1e300;
            for (double h : steps) {
                data[i] = saved + h;
                const double fp = loss_fn().item();
                data[i] = saved - h;
                const double fm = loss_fn().item();
                data[i] = saved;
                const double numeric = (fp - fm) / (2.0 * h);
                const double rel = std::abs(a - numeric) /
                                   std::max({std::abs(a), std::abs(numeric), 1e-8});
                best = std::min(best, rel);
            }
            max_rel = std::max(max_rel, best);
        }
    }
    return max_rel;
}

// ---- checkpoint io ----

namespace {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

void save_params(const Params& params, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("save_params: cannot open " + path);
    }
    out << "crowdtrack-checkpoint 1\n";
    out << "params " << params.items().size() << "\n";
    for (const auto& [name, v] : params.items()) {
        const Shape& s = v.shape();
        out << name << " " << s.depth << " " << s.rows << " " << s.cols << "\n";
        const auto& data = v.data();
        for (size_t i = 0; i < data.size(); ++i) {
            if (i > 0) out << " ";
            out << format_double(data[i]);
        }
        out << "\n";
    }
}

Params load_params(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("load_params: cannot open " + path);
    }
    std::string magic;
    int version = 0;
    in >> magic >> version;
    if (magic != "crowdtrack-checkpoint" || version != 1) {
        throw std::runtime_error("load_params: bad header in " + path);
    }
    std::string tag;
    size_t count = 0;
    in >> tag >> count;
    if (tag != "params") {
        throw std::runtime_error("load_params: bad section in " + path);
    }
    Params params;
    for (size_t p = 0; p < count; ++p) {
        std::string name;
        Shape s;
        in >> name >> s.depth >> s.rows >> s.cols;
        std::vector<double> data(s.size());
        for (auto& v : data) {
            in >> v;
        }
        if (!in) {
            throw std::runtime_error("load_params: truncated file " + path);
        }
        params.add(name, Value::leaf(s, std::move(data)));
    }
    return params;
}

void load_params_into(Params& params, const std::string& path) {
    Params loaded = load_params(path);
    for (const auto& [name, v] : loaded.items()) {
        if (!params.contains(name)) {
            throw std::runtime_error("load_params_into: unexpected parameter " + name);
        }
        Value dst = params.get(name);
        if (!(dst.shape() == v.shape())) {
            throw std::runtime_error("load_params_into: shape mismatch for " + name);
        }
        dst.data() = v.data();
    }
}

}  // namespace crowdtrack::nnet
