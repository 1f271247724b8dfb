#include <math.h>
#include <stdio.h>
#include <string.h>

#include "sls.h"

#define CHECK(cond)                                                       \
    do {                                                                  \
        if (!(cond)) {                                                    \
            fprintf(stderr, "check failed at line %d: %s\n", __LINE__, #cond); \
            return 1;                                                     \
        }                                                                 \
    } while (0)

int main(void) {
    SlsGame *game = NULL;
    CHECK(sls_game_new("{\"kind\":\"fixture\",\"name\":\"example1\"}", NULL, &game) == SLS_STATUS_OK);

    size_t n = 0;
    CHECK(sls_game_item_count(game, &n) == SLS_STATUS_OK && n == 3);

    double value = 0.0, gap = 1.0;
    CHECK(sls_solve_full_game(game, 1000, &value, &gap) == SLS_STATUS_OK);
    CHECK(fabs(value - 5.0 / 3.0) < 1e-6);

    double prior[3] = {0.8, 0.1, 0.1};
    double cost = 0.0;
    CHECK(sls_best_response(game, prior, 3, &cost) == SLS_STATUS_OK);
    CHECK(fabs(cost - 1.2) < 1e-12);

    SlsReport *report = NULL;
    CHECK(sls_eval(game, "got", 4, 1, &report) == SLS_STATUS_OK);
    double worst = 0.0;
    CHECK(sls_report_worst(report, &worst, NULL) == SLS_STATUS_OK);
    CHECK(worst >= 1.0 && worst <= 2.0);
    char *json = NULL;
    CHECK(sls_report_json(report, &json) == SLS_STATUS_OK);
    CHECK(strstr(json, "sls-eval/1") != NULL);
    sls_string_free(json);
    sls_report_free(report);

    size_t questions = 0;
    CHECK(sls_play(game, "nonsense", 0, 0, &questions) == SLS_STATUS_INVALID_ARGUMENT);
    CHECK(sls_last_error() != NULL);
    CHECK(strcmp(sls_status_name(SLS_STATUS_INVALID_ARGUMENT), "invalid argument") == 0);

    sls_game_free(game);
    printf("ok %s\n", sls_version());
    return 0;
}
