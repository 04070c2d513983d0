/* Copyright 2026 The jumprev Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Exercises the C interface from C: configuration, simulation, reversal of
 * an ensemble, error reporting and a full command run.
 */

#include <math.h>
#include <stdio.h>
#include <string.h>

#include "jumprev/jumprev.h"

static int failures = 0;

#define EXPECT(cond)                                          \
  do {                                                        \
    if (!(cond)) {                                            \
      fprintf(stderr, "%s:%d: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                             \
    }                                                         \
  } while (0)

int main(int argc, char** argv) {
  const char* out_dir = argc > 1 ? argv[1] : "c_smoke_out";
  jr_config* cfg = NULL;
  jr_ensemble* ens = NULL;
  jr_ensemble* rev = NULL;
  double forward_state = 0.0, reversed_state = 0.0;

  EXPECT(strlen(jr_version()) > 0);
  EXPECT(jr_demo_count() >= 9);
  EXPECT(jr_demo_name(jr_demo_count()) == NULL);

  EXPECT(jr_config_from_string("{not json", &cfg) == JR_CONFIG_ERROR);
  EXPECT(jr_last_error() == JR_CONFIG_ERROR);
  EXPECT(strlen(jr_last_message()) > 0);
  EXPECT(jr_config_from_demo("no_such_demo", &cfg) == JR_CONFIG_ERROR);

  EXPECT(jr_config_from_demo("poisson", &cfg) == JR_OK);
  EXPECT(jr_config_set_n_paths(cfg, 500) == JR_OK);
  EXPECT(jr_config_set_seed(cfg, 42) == JR_OK);
  EXPECT(jr_config_set_threads(cfg, -1) == JR_CONFIG_ERROR);
  EXPECT(jr_ensemble_simulate(cfg, &ens) == JR_OK);
  EXPECT(jr_ensemble_size(ens) == 500);
  EXPECT(jr_ensemble_dimension(ens) == 1);

  /* X_t and its reversal at T - t agree away from jump times. */
  EXPECT(jr_ensemble_reverse(ens, &rev) == JR_OK);
  EXPECT(jr_ensemble_state_at(ens, 3, 0.25, &forward_state) == JR_OK);
  EXPECT(jr_ensemble_state_at(rev, 3, 0.75, &reversed_state) == JR_OK);
  EXPECT(forward_state == reversed_state);
  EXPECT(jr_ensemble_state_at(ens, 0, 2.0, &forward_state) == JR_CONFIG_ERROR);
  EXPECT(jr_ensemble_state_at(ens, 500, 0.5, &forward_state) == JR_CONFIG_ERROR);

  EXPECT(jr_run_reverse(cfg, out_dir) == JR_OK);

  EXPECT(jr_entropy_h(1.0) == 0.0);
  EXPECT(jr_entropy_h(0.0) == 1.0);
  EXPECT(isinf(jr_entropy_h(-1.0)));
  EXPECT(fabs(jr_young_theta(-1.0) - (2.0 * log(2.0) - 1.0)) < 1e-15);

  jr_ensemble_free(rev);
  jr_ensemble_free(ens);
  jr_config_free(cfg);

  if (failures == 0) printf("c_smoke: ok\n");
  return failures == 0 ? 0 : 1;
}
