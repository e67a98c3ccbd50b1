import sys
from pathlib import Path

# Add the parent directory to the import path
sys.path.append(str(Path(__file__).parent.parent))

from fastmcp import FastMCP

from core.cp import cp_penalty, lindblads_from_generator
from core.errors import LindbladFitError
from core.hadamard import decompose_relaxation
from core.io import (
    dataset_from_json,
    dataset_to_json,
    generator_from_json,
    load_json,
    report_to_json,
    write_json,
)
from core.synth import NoiseSpec, add_noise, simulate_propagators
from estimators import FitConfig, get_estimator
from utils.helpers import format_matrix

# Initialize FastMCP server
mcp = FastMCP("lindblad-fit")


def simulate_dataset(generator_path: str, times: str, output_path: str,
                     noise_sigma: float = 0.0, seed: int = 0) -> str:
    """
    Simulate exact propagators exp(-G t) for a generator file and save them as a dataset.

    Args:
        generator_path: generator JSON (Hamiltonian and relaxation part)
        times: comma-separated times in seconds, e.g. "0.4,0.8,1.6,3.2"
        output_path: where to write the dataset JSON
        noise_sigma: relative Gaussian noise on the propagators (0 = noiseless)
        seed: noise seed
    """
    try:
        g = generator_from_json(load_json(generator_path))
        t = [float(x) for x in times.split(",") if x.strip()]
        ds = simulate_propagators(g, t)
        if noise_sigma > 0:
            ds = add_noise(ds, NoiseSpec(sigma=noise_sigma, seed=seed))
        write_json(output_path, dataset_to_json(ds))
        return f"**Dataset** N={ds.n}, {len(t)} times, noise {noise_sigma:g} -> {output_path}"
    except (LindbladFitError, ValueError) as e:
        return f"Error simulating dataset: {str(e)}"


def estimate_generator(dataset_path: str, method: str = "cpfit", structure: str = "full",
                       output_path: str = "") -> str:
    """
    Estimate the supergenerator of a tomography dataset.

    Args:
        dataset_path: dataset JSON from simulate_dataset or an experiment
        method: logm, richardson, eiglog, cpfit or lsfit
        structure: full, kite or none (fit methods only)
        output_path: optional path for the JSON report
    """
    try:
        ds = dataset_from_json(load_json(dataset_path))
        report = get_estimator(method, FitConfig(structure=structure)).estimate(ds)
        if output_path:
            write_json(output_path, report_to_json(report))
        basis = "transition" if ds.n == 4 else "cartesian"
        result = f"**{report.method} estimate**\n\n"
        result += f"• chi^2: {report.chi_squared:.4e}\n"
        result += f"• CP penalty: {report.penalty_at_solution:.4e}\n"
        result += f"• converged: {report.converged}\n\n"
        result += f"Relaxation matrix ({basis} basis):\n"
        result += format_matrix(report.estimate.in_basis(basis).relaxation_part)
        return result
    except LindbladFitError as e:
        return f"Error estimating generator: {str(e)}"


def decompose_generator(generator_path: str) -> str:
    """
    Split a two-spin relaxation matrix into T1 and T2 (nonadiabatic, adiabatic) Lindblad operators.

    Args:
        generator_path: generator JSON with N=4
    """
    try:
        g = generator_from_json(load_json(generator_path))
        decomp = decompose_relaxation(g.in_basis("transition").relaxation_part)
        result = f"**T1/T2 decomposition** ({len(decomp.lindblads)} Lindblad operators)\n\n"
        for tag, w, share in zip(decomp.lindblads.provenance, decomp.lindblads.weights,
                                 decomp.lindblads.shares()):
            result += f"• {tag}: rate {w:.4f} s^-1 ({100 * share:.1f}%)\n"
        result += f"\nDiscrepancy: {decomp.discrepancy:.4f}\n"
        return result
    except LindbladFitError as e:
        return f"Error decomposing generator: {str(e)}"


def cp_penalty_of_generator(generator_path: str) -> str:
    """
    Report the CP penalty and spectral Lindblad operators of a generator.

    Args:
        generator_path: generator JSON
    """
    try:
        g = generator_from_json(load_json(generator_path))
        penalty = cp_penalty(g)
        ls = lindblads_from_generator(g)
        result = f"**CP penalty**: {penalty:.4e}\n"
        result += f"**Lindblad operators**: {len(ls)}\n"
        for i, w in enumerate(ls.weights, 1):
            result += f"{i}. rate {w:.4f}\n"
        return result
    except LindbladFitError as e:
        return f"Error computing CP penalty: {str(e)}"


for _tool in (simulate_dataset, estimate_generator, decompose_generator, cp_penalty_of_generator):
    mcp.tool()(_tool)

# Run the server
if __name__ == "__main__":
    mcp.run()
