/* C interface to the grazesim scattering library.
 *
 * Units: energies in meV, lengths in Angstrom, masses in amu, wavevectors
 * in 1/Angstrom. Handles are opaque; release them with the matching
 * grz_*_free. Fallible calls return a GRZ_* status code and report details
 * through grz_last_error() (thread-local, valid until the next failing
 * call on the same thread).
 *
 * Maintained by hand alongside grazesim-ffi/src/lib.rs; the Rust test
 * suite checks that the declarations stay in sync with the exports.
 */

#ifndef GRAZESIM_H
#define GRAZESIM_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
    GRZ_OK = 0,
    GRZ_NULL_ARGUMENT = 1,
    GRZ_INVALID_INPUT = 2,
    GRZ_DOMAIN_ERROR = 3,
    GRZ_PHYSICS_ERROR = 4,
    GRZ_PANIC = 5
};

typedef struct GrzPotential GrzPotential;
typedef struct GrzBeam GrzBeam;
typedef struct GrzSpectrum GrzSpectrum;

/* Classical bounce summary. status: 0 completed, 1 step budget exhausted,
 * 2 diagnostic floor hit. */
typedef struct GrzTrajectory {
    double delta_kx;
    double delta_ky;
    double delta_kz;
    double energy_drift;
    uint64_t steps;
    int32_t status;
} GrzTrajectory;

const char *grz_version(void);
const char *grz_last_error(void);

/* Corrugated-Morse surface model. */
GrzPotential *grz_potential_new(double well_depth_mev,
                                double stiffness_inv_ang,
                                double equilibrium_ang,
                                double corrugation,
                                double period_ang);
GrzPotential *grz_potential_default(void);
void grz_potential_free(GrzPotential *p);
int32_t grz_potential_evaluate(const GrzPotential *p, double x, double y,
                               double z, double *out);
int32_t grz_potential_averaged(const GrzPotential *p, double y, double z,
                               double *out);

/* Incident beam: total energy, polar angle from the outward normal
 * (incoming means pi/2 < theta < pi), azimuth from the channel axis. */
GrzBeam *grz_beam_new(double energy_mev, double theta_rad, double phi_rad,
                      double mass_amu, double z_start_ang);
void grz_beam_free(GrzBeam *b);
int32_t grz_beam_momentum(const GrzBeam *b, double out_k[3]);

/* Analytic momentum-transfer window width (wavevector and azimuth). */
int32_t grz_width_analytic(const GrzBeam *b, const GrzPotential *p,
                           double *out_w_ky, double *out_w_phi);

/* One classical bounce from cell coordinates (x0, y0); pass
 * energy_tol <= 0 for the default 1e-8. */
int32_t grz_trajectory_run(const GrzBeam *b, const GrzPotential *p,
                           double x0, double y0, double energy_tol,
                           GrzTrajectory *out);

/* Coupled-channel diffraction spectrum with automatic basis and grid. */
GrzSpectrum *grz_spectrum_solve(const GrzBeam *b, const GrzPotential *p);
void grz_spectrum_free(GrzSpectrum *s);
int32_t grz_spectrum_len(const GrzSpectrum *s);
int32_t grz_spectrum_channel(const GrzSpectrum *s, int32_t idx,
                             int32_t *out_n, double *out_ky,
                             int32_t *out_open, double *out_probability);
int32_t grz_spectrum_moments(const GrzSpectrum *s, double *out_mean,
                             double *out_rms);

#ifdef __cplusplus
}
#endif

#endif /* GRAZESIM_H */
