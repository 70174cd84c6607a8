/* Fits ToyHM with MPD through the C ABI.
 * cc -I crates/ffi/include crates/ffi/examples/smoke.c target/release/libmpd_ffi.a -lm -lpthread -ldl */
#include <stdio.h>
#include "mpd.h"

int main(void) {
    double y[5] = {1.4, -0.6, 2.3, 0.9, 3.1};
    MpdModel *model = NULL;
    MpdSampler *sampler = NULL;
    double theta = 0.0, mle = 0.0;
    char msg[256];
    MpdParams p = {0.7, 403.96, 0.7, 403.96, 1e-4, 1e-2};

    if (mpd_toyhm_new(y, 5, 1.0, &model) != MPD_STATUS_OK) return 1;
    if (mpd_sampler_new(model, &p, MPD_ALGORITHM_MPD, 50, NULL, 0, 7, &sampler) != MPD_STATUS_OK) {
        mpd_last_error(msg, sizeof msg);
        fprintf(stderr, "%s\n", msg);
        return 1;
    }
    mpd_model_free(model);
    if (mpd_sampler_step(sampler, 5000) != MPD_STATUS_OK) return 1;
    mpd_sampler_theta(sampler, &theta, 1);
    mpd_toyhm_mle(y, 5, &mle);
    printf("mpd %s: theta %.4f, mle %.4f\n", mpd_version(), theta, mle);
    mpd_sampler_free(sampler);

    if (mpd_toyhm_new(y, 0, 1.0, &model) == MPD_STATUS_OK) return 1;
    mpd_last_error(msg, sizeof msg);
    printf("empty data rejected: %s\n", msg);
    return 0;
}
