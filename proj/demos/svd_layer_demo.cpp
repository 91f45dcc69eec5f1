// Trains an SVD-parameterized orthogonal layer on a toy regression target
// and prints the loss together with an orthogonality drift measurement.
#include <cstdio>
#include <random>

#include "fasth/matops.hpp"
#include "fasth/svd_layer.hpp"

using namespace fasth;

int main() {
    const std::size_t d = 32, m = 8;
    std::mt19937_64 rng(1234);

    SvdParam param = SvdParam::random(d, d, d, d, rng);
    SvdParam target = SvdParam::random(d, d, d, d, rng);

    std::normal_distribution<double> gauss(0.0, 1.0);
    auto sample = [&] {
        Matrix x(d, m);
        for (double& e : x.data()) e = gauss(rng);
        return x;
    };

    for (int step = 0; step <= 200; ++step) {
        Matrix x = sample();
        Matrix want = svd_forward(target, x, 0).first;
        auto [got, tape] = svd_forward(param, x, 0);

        Matrix resid(d, m);
        for (std::size_t i = 0; i < resid.data().size(); ++i)
            resid.data()[i] = got.data()[i] - want.data()[i];
        double loss = frobenius_norm(resid);

        if (step % 50 == 0) {
            Matrix u = chain_to_dense(param.U);
            Matrix eye = Matrix::identity(d);
            double drift = frobenius_distance(matmul(transpose(u), u), eye);
            std::printf("step %3d  loss %.6f  ||U^T U - I||_F %.3e\n", step, loss, drift);
        }
        param = svd_step(param, svd_backward(param, tape, resid), 1e-3);
        param = clamp_sigma(param, 0.5);
    }

    std::printf("log|det W| = %.6f\n", log_abs_det(param));
    return 0;
}
