#ifndef VIBRONIC_H
#define VIBRONIC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum VibronicStatus {
  VIBRONIC_STATUS_OK = 0,
  VIBRONIC_STATUS_NULL_POINTER = 1,
  VIBRONIC_STATUS_INVALID_ARGUMENT = 2,
  VIBRONIC_STATUS_CONFIG = 3,
  VIBRONIC_STATUS_NUMERICAL = 4,
  VIBRONIC_STATUS_IO = 5,
  VIBRONIC_STATUS_PANIC = 6,
} VibronicStatus;

// Stage selected by [`vibronic_scenario_run`].
typedef enum VibronicCommand {
  VIBRONIC_COMMAND_INTEGRALS = 0,
  VIBRONIC_COMMAND_MAP = 1,
  VIBRONIC_COMMAND_SIMULATE = 2,
  VIBRONIC_COMMAND_TOMOGRAPHY = 3,
} VibronicCommand;

// Mapped qubit-boson Hamiltonian.
typedef struct VibronicHamiltonian VibronicHamiltonian;

// Configured scenario with its output directory.
typedef struct VibronicScenario VibronicScenario;

// Trajectory of one propagation.
typedef struct VibronicSimulation VibronicSimulation;

// One trajectory row; `fon` holds the four spin-orbital occupations.
typedef struct VibronicTrajectoryRow {
  double t;
  double norm;
  double energy;
  double fon[4];
  double r_mean;
  double r2_mean;
} VibronicTrajectoryRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next call into this library on the same thread.
const char *vibronic_last_error(void);

// Library version as a static string.
const char *vibronic_version(void);

// Checks the linear-algebra backend on a small eigenproblem.
enum VibronicStatus vibronic_backend_check(void);

// Creates a scenario from TOML text (null for defaults) and an output
// directory (null keeps `output_dir` from the configuration).
//
// # Safety
// `toml` and `out_dir` must be null or valid NUL-terminated strings; `out`
// must point to writable storage for one handle.
enum VibronicStatus vibronic_scenario_new(const char *toml,
                                          const char *out_dir,
                                          struct VibronicScenario **out);

// Releases a scenario; null is ignored.
//
// # Safety
// `s` must be null or a handle from [`vibronic_scenario_new`] not yet freed.
void vibronic_scenario_free(struct VibronicScenario *s);

// Runs one stage and writes its files into the output directory.
//
// # Safety
// `s` must be a live scenario handle.
enum VibronicStatus vibronic_scenario_run(const struct VibronicScenario *s,
                                          enum VibronicCommand command);

// Builds (or loads from cache) the mapped Hamiltonian.
//
// # Safety
// `s` must be a live scenario handle; `out` must point to writable storage.
enum VibronicStatus vibronic_hamiltonian_build(const struct VibronicScenario *s,
                                               struct VibronicHamiltonian **out);

// Releases a Hamiltonian; null is ignored.
//
// # Safety
// `h` must be null or a handle from [`vibronic_hamiltonian_build`] not yet freed.
void vibronic_hamiltonian_free(struct VibronicHamiltonian *h);

// Number of Pauli terms, or 0 for a null handle.
//
// # Safety
// `h` must be null or a live Hamiltonian handle.
size_t vibronic_hamiltonian_term_count(const struct VibronicHamiltonian *h);

// Term `index`: its Pauli letters (qubit 1 first, NUL-terminated) into
// `pauli` of capacity `pauli_len`, and its constant and (b + b†) coefficients.
//
// # Safety
// `h` must be a live handle; `pauli` must hold `pauli_len` bytes; `v0` and
// `v1` must be writable.
enum VibronicStatus vibronic_hamiltonian_term(const struct VibronicHamiltonian *h,
                                              size_t index,
                                              char *pauli,
                                              size_t pauli_len,
                                              double *v0,
                                              double *v1);

// Boson frequency of the Hamiltonian, or NaN for a null handle.
//
// # Safety
// `h` must be null or a live Hamiltonian handle.
double vibronic_hamiltonian_omega(const struct VibronicHamiltonian *h);

// JSON form of the Hamiltonian; release with [`vibronic_string_free`].
//
// # Safety
// `h` must be a live handle; `out` must point to writable storage.
enum VibronicStatus vibronic_hamiltonian_to_json(const struct VibronicHamiltonian *h, char **out);

// Releases a string returned by this library; null is ignored.
//
// # Safety
// `s` must be null or a string returned by this library not yet freed.
void vibronic_string_free(char *s);

// Propagates with the configured method without writing files.
//
// # Safety
// `s` must be a live scenario handle; `out` must point to writable storage.
enum VibronicStatus vibronic_simulate(const struct VibronicScenario *s,
                                      struct VibronicSimulation **out);

// Releases a simulation; null is ignored.
//
// # Safety
// `sim` must be null or a handle from [`vibronic_simulate`] not yet freed.
void vibronic_simulation_free(struct VibronicSimulation *sim);

// Number of trajectory rows, or 0 for a null handle.
//
// # Safety
// `sim` must be null or a live simulation handle.
size_t vibronic_simulation_len(const struct VibronicSimulation *sim);

// Copies trajectory row `index` into `row`.
//
// # Safety
// `sim` must be a live handle and `row` writable.
enum VibronicStatus vibronic_simulation_row(const struct VibronicSimulation *sim,
                                            size_t index,
                                            struct VibronicTrajectoryRow *row);

// Number of spin-adapted configurations for spin `two_s / 2`.
//
// # Safety
// `out` must be writable.
enum VibronicStatus vibronic_weyl_count(uint32_t two_s,
                                        uint32_t n_spin_orbitals,
                                        uint32_t n_electrons,
                                        uint64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VIBRONIC_H */
