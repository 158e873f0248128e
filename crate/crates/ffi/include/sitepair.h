/* C interface to the sitepair two-atom lattice-site solver. */
#ifndef SITEPAIR_H
#define SITEPAIR_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum SpStatus {
    SP_OK = 0,
    SP_NULL_POINTER = 1,
    SP_INVALID_UTF8 = 2,
    SP_CONFIG = 3,
    SP_DOMAIN = 4,
    SP_NUMERICAL = 5,
    SP_NOT_FOUND = 6,
    SP_IO = 7,
    SP_INVALID_ARGUMENT = 8,
    SP_PANIC = 9
} SpStatus;

/* Taylor order 2 or 6, uncoupled (E) or after configuration interaction (CI). */
typedef enum SpLevel {
    SP_LEVEL_E2 = 0,
    SP_LEVEL_CI2 = 1,
    SP_LEVEL_E6 = 2,
    SP_LEVEL_CI6 = 3
} SpLevel;

typedef enum SpTag {
    SP_TAG_LEAST_BOUND = 0,
    SP_TAG_FIRST_TRAP_INDUCED = 1
} SpTag;

/* Energies and their differences for one state, in kHz. */
typedef struct SpLedger {
    double e2;
    double ci2;
    double e6;
    double ci6;
    double geom;  /* e2 - e6 */
    double coup2; /* e2 - ci2 */
    double coup6; /* e6 - ci6 */
    double tot;   /* geom + coup6 */
} SpLedger;

typedef struct SpSystem SpSystem;
typedef struct SpPoint SpPoint;

const char *sp_version(void);

/* Message of the last failed call on this thread, empty after success.
   Valid until the next library call on the same thread. */
const char *sp_last_error(void);

/* Depths in recoil energies of the first atom; frequencies are omega/2pi in kHz. */
SpStatus sp_trap_frequencies(const char *first, const char *second, double wavelength_nm,
                             double depth_first, double depth_second,
                             double *omega_rel_khz, double *omega_com_khz);

SpStatus sp_system_from_toml(const char *toml, SpSystem **out);
void sp_system_free(SpSystem *system);

/* omega in hartree, a_ho in bohr, xi = a_sc / a_ho. */
SpStatus sp_system_scales(const SpSystem *system, double a_sc, double *omega, double *a_ho, double *xi);

/* Tunes to a_sc (bohr) and solves all configured orders. Not thread-safe per system. */
SpStatus sp_system_solve(SpSystem *system, double a_sc, SpPoint **out);
void sp_point_free(SpPoint *point);

SpStatus sp_point_achieved_a_sc(const SpPoint *point, double *a_sc);

/* Energy in hartree. */
SpStatus sp_point_energy(const SpPoint *point, SpLevel level, SpTag tag, double *energy);
SpStatus sp_point_ledger(const SpPoint *point, SpTag tag, SpLedger *ledger);

/* rho(r) per bohr at n radii (bohr). */
SpStatus sp_point_radial_density(const SpPoint *point, SpLevel level, SpTag tag,
                                 const double *r, size_t n, double *rho);

/* Pseudopotential energy in a harmonic trap, in the units of omega; window -1 is the bound branch. */
SpStatus sp_energy_from_asc(double a_sc, double omega, double a_ho, int window, double *energy);

double sp_hartree_to_khz(double energy);

#ifdef __cplusplus
}
#endif

#endif
