// Temporary engine smoke exercise; replaced by the real suites.
#include <cmath>
#include <cstdio>

#include "atrfas/gradcheck.hpp"
#include "atrfas/ops.hpp"
#include "atrfas/serialize.hpp"

using namespace atrfas;
using namespace atrfas::nd;

#define CHECK(cond)                                                     \
    do {                                                                \
        if (!(cond)) {                                                  \
            std::printf("FAIL %s:%d: %s\n", __FILE__, __LINE__, #cond); \
            return 1;                                                   \
        }                                                               \
    } while (0)

int main() {
    // softmax closed form
    Tensor v = Tensor::from(Shape{2}, {0.0f, std::log(3.0f)});
    Tensor s = softmax(v, 0);
    CHECK(std::fabs(s.data()[0] - 0.25f) < 1e-6f);
    CHECK(std::fabs(s.data()[1] - 0.75f) < 1e-6f);

    // sum(x*x) gradient = 2x
    Tensor x = Tensor::from(Shape{3}, {1.0f, -2.0f, 0.5f}, true);
    Tensor loss = sum_all(mul(x, x));
    loss.backward();
    CHECK(std::fabs(x.grad()[0] - 2.0f) < 1e-6f);
    CHECK(std::fabs(x.grad()[1] + 4.0f) < 1e-6f);
    CHECK(std::fabs(x.grad()[2] - 1.0f) < 1e-6f);

    // conv identity: 1x1 kernel of value 1
    RngStream rng(7);
    Tensor img = randn(Shape{1, 1, 4, 4}, rng);
    Tensor k1 = Tensor::from(Shape{1, 1, 1, 1}, {1.0f});
    Tensor out = conv2d(img, k1, {}, 1, 0);
    for (int i = 0; i < 16; ++i) CHECK(out.data()[i] == img.data()[i]);

    // grad_check over a conv -> relu -> mean composite
    float err = grad_check(
        [](const std::vector<Tensor>& in) {
            return mean_all(relu(conv2d(in[0], in[1], in[2], 2, 1)));
        },
        {Shape{1, 2, 6, 6}, Shape{3, 2, 3, 3}, Shape{3}}, 11, 1e-2f);
    std::printf("composite grad_check err = %g\n", double(err));
    CHECK(err < 1e-3f);

    float err2 = grad_check(
        [](const std::vector<Tensor>& in) {
            return sum_all(mul(softmax(in[0], 1), in[1]));
        },
        {Shape{2, 5}, Shape{2, 5}}, 3, 1e-3f);
    std::printf("softmax grad_check err = %g\n", double(err2));
    CHECK(err2 < 1e-3f);

    std::printf("smoke ok\n");
    return 0;
}
