#ifndef NEUROCAP_H
#define NEUROCAP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Output conventions for [`neurocap_capacity_solve`].
 */
typedef enum NeurocapCoding {
  NEUROCAP_TEMPORAL = 0,
  NEUROCAP_RATE = 1,
} NeurocapCoding;

/**
 * Status codes returned by every entry point.
 */
typedef enum NeurocapStatus {
  NEUROCAP_OK = 0,
  NEUROCAP_NULL_POINTER = 1,
  NEUROCAP_INVALID_ARGUMENT = 2,
  NEUROCAP_NUMERICAL_ERROR = 3,
  NEUROCAP_INTERNAL_ERROR = 4,
} NeurocapStatus;

/**
 * Opaque capacity solution. Obtain with [`neurocap_capacity_solve`], release
 * with [`neurocap_solution_free`].
 */
typedef struct NeurocapSolution NeurocapSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread. The pointer stays
 * valid until the next failing call on the same thread; do not free it.
 */
const char *neurocap_last_error_message(void);

/**
 * Entropy of a probability vector, bits.
 *
 * # Safety
 * `probs` must point to `len` doubles; `out` must be writable.
 */
enum NeurocapStatus neurocap_entropy(const double *probs, size_t len, double *out);

/**
 * Binary entropy H(theta), bits.
 *
 * # Safety
 * `out` must be writable.
 */
enum NeurocapStatus neurocap_binary_entropy(double theta, double *out);

/**
 * Binary symmetric channel capacity 1 - H(p), bits per use.
 *
 * # Safety
 * `out` must be writable.
 */
enum NeurocapStatus neurocap_bsc_capacity(double p, double *out);

/**
 * Kullback-Leibler divergence D(p||q) in bits. A support violation yields
 * +infinity with an OK status: it is a value, not an error.
 *
 * # Safety
 * `p` and `q` must point to `len` doubles; `out` must be writable.
 */
enum NeurocapStatus neurocap_kl_divergence(const double *p,
                                           const double *q,
                                           size_t len,
                                           double *out);

/**
 * Mutual information of a joint distribution given row-major as
 * `rows x cols` doubles, bits.
 *
 * # Safety
 * `joint` must point to `rows*cols` doubles; `out` must be writable.
 */
enum NeurocapStatus neurocap_mutual_information(const double *joint,
                                                size_t rows,
                                                size_t cols,
                                                double *out);

/**
 * Blahut-Arimoto capacity of a discrete channel given row-major as
 * `n_inputs x n_outputs` conditional probabilities. Writes the capacity in
 * bits and, when `out_input` is non-null, the optimal input distribution
 * (`n_inputs` doubles).
 *
 * # Safety
 * `rows` must point to `n_inputs*n_outputs` doubles; `out_capacity` must be
 * writable; `out_input`, when non-null, must hold `n_inputs` doubles.
 */
enum NeurocapStatus neurocap_blahut_arimoto(const double *rows,
                                            size_t n_inputs,
                                            size_t n_outputs,
                                            double tol,
                                            size_t max_iter,
                                            double *out_capacity,
                                            double *out_input);

/**
 * Natural-log conditional ISI density ln p(t|theta) for the gamma channel.
 *
 * # Safety
 * `out` must be writable.
 */
enum NeurocapStatus neurocap_isi_log_density(double kappa,
                                             double a0,
                                             double b0,
                                             double t,
                                             double theta,
                                             double *out);

/**
 * Spike-count probability P(R = r | theta) over a window of `delta` seconds.
 *
 * # Safety
 * `out` must be writable.
 */
enum NeurocapStatus neurocap_count_pmf(double kappa,
                                       double a0,
                                       double b0,
                                       double delta,
                                       size_t r,
                                       double theta,
                                       double *out);

/**
 * Solves for the capacity and capacity-achieving ensemble of the gamma ISI
 * channel. `delta` is ignored for temporal coding. `tol` is the certificate
 * slack in bits; pass 0 for the default 1e-4.
 *
 * # Safety
 * `out` must be a writable handle slot.
 */
enum NeurocapStatus neurocap_capacity_solve(enum NeurocapCoding coding,
                                            double kappa,
                                            double a0,
                                            double b0,
                                            double delta,
                                            double tol,
                                            struct NeurocapSolution **out);

/**
 * Number of support points of a solution.
 *
 * # Safety
 * `handle` must be a live solution handle; `out` must be writable.
 */
enum NeurocapStatus neurocap_solution_support_len(const struct NeurocapSolution *handle,
                                                  size_t *out);

/**
 * Capacity in bits per channel use and bits per second.
 *
 * # Safety
 * `handle` must be a live solution handle; out pointers, when non-null,
 * must be writable.
 */
enum NeurocapStatus neurocap_solution_capacity(const struct NeurocapSolution *handle,
                                               double *out_per_use,
                                               double *out_bps);

/**
 * Whether the KKT certificate passed.
 *
 * # Safety
 * `handle` must be a live solution handle; `out` must be writable.
 */
enum NeurocapStatus neurocap_solution_certified(const struct NeurocapSolution *handle, bool *out);

/**
 * Copies the support points and weights into caller buffers of capacity
 * `cap` each; writes the number of entries copied.
 *
 * # Safety
 * `handle` must be a live solution handle; `points` and `weights`, when
 * non-null, must hold `cap` doubles; `written` must be writable.
 */
enum NeurocapStatus neurocap_solution_support(const struct NeurocapSolution *handle,
                                              double *points,
                                              double *weights,
                                              size_t cap,
                                              size_t *written);

/**
 * Serializes the solution to its JSON document form. Free the returned
 * string with [`neurocap_string_free`]. Returns null on failure.
 *
 * # Safety
 * `handle` must be a live solution handle.
 */
char *neurocap_solution_to_json(const struct NeurocapSolution *handle);

/**
 * Frees a string returned by [`neurocap_solution_to_json`].
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void neurocap_string_free(char *s);

/**
 * Releases a solution handle.
 *
 * # Safety
 * `handle` must come from [`neurocap_capacity_solve`] and not be freed twice.
 */
void neurocap_solution_free(struct NeurocapSolution *handle);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* NEUROCAP_H */
