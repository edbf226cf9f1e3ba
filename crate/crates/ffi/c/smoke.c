/* Build: cc c/smoke.c -Iinclude -L../../target/debug -lfairmix_ffi -lpthread -ldl -lm */
#include <stdio.h>
#include "fairmix.h"

int main(void) {
    FmDataset *ds = NULL;
    FmClassifiers *members = NULL;
    double w[8];
    size_t n_w = 0;
    if (fm_scenario_new(3, &ds, &members, w, 8, &n_w) != FM_STATUS_OK) {
        fprintf(stderr, "scenario: %s\n", fm_last_error());
        return 1;
    }
    uint32_t metrics[2] = {FM_METRIC_TPR, FM_METRIC_TNR};
    double best[8], acc = 0.0;
    FmStatus st = fm_solve_fair_mixture(ds, members, metrics, 2, 0.0, true, best, 8, &acc);
    if (st != FM_STATUS_OK) {
        fprintf(stderr, "solve: %s\n", fm_last_error());
        return 1;
    }
    printf("weights %.6f %.6f accuracy %.6f\n", best[0], best[1], acc);
    char *json = fm_audit_json(ds, members, best, n_w, 1e-9);
    if (json == NULL) return 1;
    fm_string_free(json);
    fm_classifiers_free(members);
    fm_dataset_free(ds);
    return 0;
}
