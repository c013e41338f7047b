#ifndef HTODA_H
#define HTODA_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HtodaStatus {
  HTODA_STATUS_OK = 0,
  HTODA_STATUS_NULL_POINTER = 1,
  HTODA_STATUS_INVALID_STRING = 2,
  HTODA_STATUS_BUFFER_TOO_SMALL = 3,
  HTODA_STATUS_PANIC = 4,
  HTODA_STATUS_DOMAIN = 10,
  HTODA_STATUS_CONVERGENCE = 11,
  HTODA_STATUS_PARAMETER = 12,
  HTODA_STATUS_MONOTONICITY = 13,
  HTODA_STATUS_QUADRATURE = 14,
  HTODA_STATUS_CONVEXITY = 15,
  HTODA_STATUS_HYPOTHESIS = 16,
  HTODA_STATUS_GRID = 17,
  HTODA_STATUS_CONFIG = 18,
  HTODA_STATUS_IO = 19,
} HtodaStatus;

typedef enum HtodaSide {
  HTODA_SIDE_PRIMAL = 0,
  HTODA_SIDE_DUAL = 1,
} HtodaSide;

typedef enum HtodaBoundary {
  HTODA_BOUNDARY_FIXED = 0,
  HTODA_BOUNDARY_PERIODIC = 1,
} HtodaBoundary;

/**
 * A chain `K = (1/2m) sum (p_{i+1} - p_i)^2`, `U = sum phi(q_i)`.
 */
typedef struct HtodaLattice HtodaLattice;

/**
 * A convex scalar function paired with its Legendre transform.
 */
typedef struct HtodaPotential HtodaPotential;

/**
 * Sampled phase-space path from the integrator.
 */
typedef struct HtodaTrajectory HtodaTrajectory;

/**
 * Summary of one residual check.
 */
typedef struct HtodaReport {
  double max_residual;
  double mean_residual;
  double tolerance;
  bool passed;
} HtodaReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call into the library.
 */
const char *htoda_last_error(void);

const char *htoda_version(void);

void htoda_string_free(char *s);

/**
 * `phi(z) = (A/B) e^{-Bz} + A z`.
 */
enum HtodaStatus htoda_potential_toda(double a, double b, struct HtodaPotential **out);

/**
 * `|z|^beta / beta`.
 */
enum HtodaStatus htoda_potential_power(double beta, struct HtodaPotential **out);

enum HtodaStatus htoda_potential_quadratic(double stiffness, struct HtodaPotential **out);

/**
 * Builds a potential from the JSON accepted by the command line, e.g.
 * `{"kind":"deformed","params":{"exponent":2}}`.
 */
enum HtodaStatus htoda_potential_from_json(const char *json, struct HtodaPotential **out);

/**
 * New handle with primal and dual exchanged.
 */
enum HtodaStatus htoda_potential_flipped(const struct HtodaPotential *pot,
                                         struct HtodaPotential **out);

void htoda_potential_free(struct HtodaPotential *pot);

/**
 * Value (`order` 0) or derivative of order 1 to 3 of one side of the pair.
 */
enum HtodaStatus htoda_potential_eval(const struct HtodaPotential *pot,
                                      enum HtodaSide side,
                                      uint32_t order,
                                      double x,
                                      double *out);

enum HtodaStatus htoda_potential_bregman(const struct HtodaPotential *pot,
                                         double x,
                                         double x_prime,
                                         double *out);

/**
 * Eigenvalues of the chain kinetic Hessian in ascending order. `out` must
 * hold `n` values.
 */
enum HtodaStatus htoda_chain_spectrum(size_t n,
                                      double mass,
                                      enum HtodaBoundary boundary,
                                      double *out,
                                      size_t out_len);

/**
 * The potential is copied; the handle may be freed afterwards.
 */
enum HtodaStatus htoda_lattice_new(size_t n,
                                   double mass,
                                   enum HtodaBoundary boundary,
                                   const struct HtodaPotential *pot,
                                   struct HtodaLattice **out);

void htoda_lattice_free(struct HtodaLattice *lat);

enum HtodaStatus htoda_lattice_energy(const struct HtodaLattice *lat,
                                      const double *q,
                                      const double *p,
                                      double *out);

/**
 * Integrates from `(q0, p0)`, each of length `n`, for `steps` steps.
 */
enum HtodaStatus htoda_lattice_integrate(const struct HtodaLattice *lat,
                                         const double *q0,
                                         const double *p0,
                                         double dt,
                                         size_t steps,
                                         struct HtodaTrajectory **out);

/**
 * Residuals of the dual lattice equations along `traj`.
 */
enum HtodaStatus htoda_lattice_verify_dual(const struct HtodaLattice *lat,
                                           const struct HtodaTrajectory *traj,
                                           struct HtodaReport *out);

/**
 * Tau-function check; needs the unit Toda potential with unit mass.
 */
enum HtodaStatus htoda_lattice_verify_tau(const struct HtodaLattice *lat,
                                          const struct HtodaTrajectory *traj,
                                          struct HtodaReport *out);

void htoda_trajectory_free(struct HtodaTrajectory *traj);

/**
 * Number of stored samples, `steps + 1`. Zero for a null handle.
 */
size_t htoda_trajectory_samples(const struct HtodaTrajectory *traj);

/**
 * Degrees of freedom. Zero for a null handle.
 */
size_t htoda_trajectory_dim(const struct HtodaTrajectory *traj);

/**
 * Copies `q` and `p` at sample `k` into buffers of length `dim`. Either
 * buffer may be null.
 */
enum HtodaStatus htoda_trajectory_state(const struct HtodaTrajectory *traj,
                                        size_t k,
                                        double *q,
                                        double *p);

/**
 * Loads a scenario file, runs its verifications and returns the reports as
 * a JSON array in `*out_json` (release with [`htoda_string_free`]).
 * `*all_passed` may be null.
 */
enum HtodaStatus htoda_verify_scenario(const char *path, char **out_json, bool *all_passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HTODA_H */
