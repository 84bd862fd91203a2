#include <stdio.h>
#include "loghls.h"

int main(void) {
    LoghlsConfig *cfg = loghls_config_new();
    LoghlsSpec *spec = NULL;
    double f = 0.0;
    LoghlsStatus st = loghls_spec_parse("gaussian:sigma=1", &spec);
    if (st == LOGHLS_STATUS_OK)
        st = loghls_eval(spec, cfg, "free_energy", &f);
    if (st != LOGHLS_STATUS_OK) {
        fprintf(stderr, "%s: %s\n", loghls_status_name(st), loghls_last_error());
        return 1;
    }
    printf("free_energy = %.12f\n", f);

    st = loghls_spec_parse("gaussian:sigma=-1", &spec);
    printf("negative sigma: %s (%s)\n", loghls_status_name(st), loghls_last_error());

    loghls_spec_free(spec);
    loghls_config_free(cfg);
    return 0;
}
