"""Named, ready-to-run configuration files.

Each preset is a complete config INI. Resolve one with "preset:NAME" in
place of a config path on the command line, or read the text from PRESETS
directly.

* single-epoch      one epoch, 20 channels, sources at 2/8/15 Hz
* evolving          100 epochs with slowly increasing moduli
* scaled-benchmark  50-epoch comparison of the evolutionary fit against
                    independent per-epoch fits, sized to finish quickly
* data-scale        12 channels x 247 epochs x 1000 samples, bands at
                    2/10/32 Hz, the shape of a full recording session
* smoke             tiny instance for demos and pipeline checks
"""

from __future__ import annotations

SINGLE_EPOCH = """\
[band:delta]
center_freq_hz = 2.0
rho_min = 1.0001
rho_max = 1.1

[band:alpha]
center_freq_hz = 8.0
rho_min = 1.0001
rho_max = 1.1

[band:beta]
center_freq_hz = 15.0
rho_min = 1.0001
rho_max = 1.1

[fit]
max_outer_iters = 25
outer_tol = 1e-4
optimizer_max_evals = 400
optimizer_tol = 1e-7
rng_seed = 0
block_length = 1
n_blocks = 1

[simulation]
rho_start = 1.0012, 1.0012, 1.0012
rho_increment = 0.0
sigma2 = 0.1
tau2 = 1.0
n_channels = 20
n_times = 1000
n_epochs = 1
fs = 1000.0
rng_seed = 1101
"""

EVOLVING = """\
[band:delta]
center_freq_hz = 2.0
rho_min = 1.0001
rho_max = 1.1

[band:alpha]
center_freq_hz = 8.0
rho_min = 1.0001
rho_max = 1.1

[band:beta]
center_freq_hz = 15.0
rho_min = 1.0001
rho_max = 1.1

[fit]
max_outer_iters = 8
outer_tol = 1e-3
optimizer_max_evals = 200
optimizer_tol = 1e-7
rng_seed = 0
block_length = 3
n_blocks = 4

[simulation]
rho_start = 1.001, 1.001, 1.001
rho_increment = 0.00005
sigma2 = 0.1
tau2 = 1.0
n_channels = 20
n_times = 1000
n_epochs = 100
fs = 1000.0
rng_seed = 1102
"""

SCALED_BENCHMARK = """\
[band:delta]
center_freq_hz = 4.0
rho_min = 1.0001
rho_max = 1.1

[band:alpha]
center_freq_hz = 10.0
rho_min = 1.0001
rho_max = 1.1

[band:gamma]
center_freq_hz = 32.0
rho_min = 1.0001
rho_max = 1.1

[fit]
max_outer_iters = 8
outer_tol = 1e-3
optimizer_max_evals = 200
optimizer_tol = 1e-7
rng_seed = 0
block_length = 5
n_blocks = 8

[simulation]
rho_start = 1.001, 1.001, 1.001
rho_increment = 0.0002
sigma2 = 0.1
tau2 = 1.0
tau2_increment = 0.02
n_channels = 12
n_times = 500
n_epochs = 50
fs = 1000.0
rng_seed = 1103
"""

DATA_SCALE = """\
[band:delta]
center_freq_hz = 2.0
rho_min = 1.0001
rho_max = 1.1

[band:alpha]
center_freq_hz = 10.0
rho_min = 1.0001
rho_max = 1.1

[band:gamma]
center_freq_hz = 32.0
rho_min = 1.0001
rho_max = 1.1

[fit]
max_outer_iters = 8
outer_tol = 1e-3
optimizer_max_evals = 200
optimizer_tol = 1e-7
rng_seed = 0
block_length = 10
n_blocks = 30

[simulation]
rho_start = 1.001, 1.001, 1.001
rho_increment = 0.00002
sigma2 = 0.1
tau2 = 1.0
n_channels = 12
n_times = 1000
n_epochs = 247
fs = 1000.0
rng_seed = 1104
"""

SMOKE = """\
[band:slow]
center_freq_hz = 8.0
rho_min = 1.005
rho_max = 1.2

[fit]
max_outer_iters = 4
outer_tol = 1e-3
optimizer_max_evals = 120
optimizer_tol = 1e-6
rng_seed = 0
block_length = 2
n_blocks = 3

[simulation]
rho_start = 1.05
rho_increment = 0.004
sigma2 = 1.0
tau2 = 0.5
n_channels = 3
n_times = 200
n_epochs = 6
fs = 100.0
rng_seed = 1105
"""

PRESETS = {
    "single-epoch": SINGLE_EPOCH,
    "evolving": EVOLVING,
    "scaled-benchmark": SCALED_BENCHMARK,
    "data-scale": DATA_SCALE,
    "smoke": SMOKE,
}


def preset_text(name: str) -> str:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(
            f"unknown preset {name!r}; choices: {', '.join(sorted(PRESETS))}"
        )
