"""
semzk service layer

- spectral_core: FFT substrate and Fourier multipliers
- riesz_ops: Riesz transforms, A_p constants and operator-norm searches
- sem_solver: ZK and SEM time stepping and the linearized difference equation
- carleman: Carleman, commutator, persistence and interpolation harnesses
- uniqueness_experiments: annulus norms, decay fits and the two-run contrast
- snapshot_io, reports, initial_data: files in and out
"""
