import numpy as np
import pytest
from numpy.testing import assert_allclose

from oracles import apply_kraus, op_subspace_distance, oracle_fixed_space
from ssmkit import numkernel as nk
from ssmkit.algebra import algebra_basis, commutant_basis
from ssmkit.errors import InputError, NumericalError
from ssmkit.examples import SX, SY, SZ, collective_spin, example1, example2, example3
from ssmkit.model import DensityMatrix, modified_generators, raw_generators, steady_residual, support_of
from ssmkit.structure import (
    Block,
    assemble_structure,
    block_basis,
    decompose,
    is_spectrum_nondegenerate,
    partition_blocks,
    pick_nondegenerate_pair,
    spectral_projections,
    ssm_element,
    ssm_operator_basis,
)


def setup(example, **kw):
    spec, rho0 = example(**kw)
    s = support_of(rho0)
    gens = modified_generators(raw_generators(spec), s)
    return spec, s, gens


def test_spectral_projection_clustering():
    h = np.diag([0.0, 1e-12, 1.0, 2.0, 2.0])
    projs = spectral_projections(h, "P")
    assert projs.ranks == [2, 1, 2]
    assert_allclose(sum(projs.projections), np.eye(5), atol=1e-12)
    for p in projs.projections:
        assert_allclose(p @ p, p, atol=1e-12)


def test_example1_witness_projection_ranks():
    s2 = sum(collective_spin(s) @ collective_spin(s) for s in (SX, SY, SZ))
    p = s2 + collective_spin(SZ)
    projs = spectral_projections(p, "P")
    assert sorted(projs.ranks, reverse=True) == [2, 2, 1, 1, 1, 1]
    gens = [collective_spin(s) for s in (SX, SY, SZ)]
    alg = algebra_basis(gens)
    assert is_spectrum_nondegenerate(projs, alg).passed
    # S_z alone splits the symmetric and the doublet sectors incompletely
    bad = spectral_projections(collective_spin(SZ), "P")
    assert not is_spectrum_nondegenerate(bad, alg).passed


def test_example1_partition_from_witnesses():
    gens = [collective_spin(s) for s in (SX, SY, SZ)]
    alg = algebra_basis(gens)
    comm = commutant_basis(gens)
    p, q = pick_nondegenerate_pair(alg, comm, gens, seed=0)
    blocks = partition_blocks(p, q)
    assert [(b.n, b.d) for b in blocks] == [(1, 4), (2, 2)]
    for b in blocks:
        u = block_basis(b, p, q, alg, comm, seed=1)
        assert_allclose(u.conj().T @ u, np.eye(b.n * b.d), atol=1e-10)
        # algebra elements act as I (x) M on the block
        for x in alg.basis:
            w = u.conj().T @ x @ u
            m = w[: b.d, : b.d]
            assert nk.fro(w - np.kron(np.eye(b.n), m)) < 1e-9


@pytest.mark.parametrize("example, dims", [(example1, [(1, 4), (2, 2)]), (example2, [(2, 2)]), (example3, [(2, 2)])])
@pytest.mark.parametrize("seed", [0, 3])
def test_decompose_examples(example, dims, seed):
    spec, s, gens = setup(example)
    dec = decompose(gens, s, seed=seed)
    assert dec.structure.dims == dims
    assert dec.structure.ssm_dimension == sum(n * n for n, _ in dims)
    u = dec.structure.full_basis()
    assert_allclose(u.conj().T @ u, np.eye(s.rank), atol=1e-10)
    ops = ssm_operator_basis(dec.structure)
    fixed, iso = oracle_fixed_space(spec, s.embed(s.rho0_restricted))
    assert op_subspace_distance([iso.conj().T @ o @ iso for o in ops], fixed) < 1e-7


def test_ssm_elements_are_steady(rng):
    spec, s, gens = setup(example3)
    dec = decompose(gens, s)
    xs = [rng.standard_normal((b.n, b.n)) + 1j * rng.standard_normal((b.n, b.n)) for b in dec.structure.blocks]
    x = ssm_element(dec.structure, xs)
    assert steady_residual(spec, x) < 1e-10
    with pytest.raises(InputError):
        ssm_element(dec.structure, xs + xs)
    with pytest.raises(InputError):
        ssm_element(dec.structure, [np.eye(3)])


def test_assemble_rejects_non_steady_state(rng):
    spec, s, gens = setup(example2)
    dec = decompose(gens, s)
    bases = [b.basis for b in dec.structure.blocks]
    bad = np.diag([0.4, 0.3, 0.2, 0.1]).astype(complex)
    with pytest.raises(NumericalError):
        assemble_structure(dec.blocks, bases, bad, s)


def test_pure_state_is_trivial():
    spec, _ = example3(0.25)
    rho = np.zeros((8, 8))
    rho[0, 0] = 1.0
    # |000> is not steady under example 3, so build a channel for which it is
    s = support_of(DensityMatrix(rho))
    gens = modified_generators([np.eye(8)], s)
    dec = decompose(gens, s)
    assert dec.structure.dims == [(1, 1)] and dec.structure.ssm_dimension == 1


@pytest.mark.parametrize("example, counts", [(example1, (6, 3)), (example2, (2, 2)), (example3, (2, 2))])
@pytest.mark.parametrize("seed", [0, 1, 9])
def test_witness_projection_counts_are_seed_independent(example, counts, seed):
    _, s, gens = setup(example)
    dec = decompose(gens, s, seed=seed)
    assert (len(dec.p_projs), len(dec.q_projs)) == counts


def test_example1_fixed_factors():
    _, s, gens = setup(example1)
    st = decompose(gens, s).structure
    for blk in st.blocks:
        assert_allclose(blk.rho2.matrix, np.eye(blk.d) / blk.d, atol=1e-10)


def test_twirl_recovered_from_block_weights():
    from ssmkit.algebra import twirl

    spec, rho0 = example3(0.25)
    # a non-uniform steady state inside the SSM
    s0 = support_of(rho0)
    dec0 = decompose(modified_generators(raw_generators(spec), s0), s0)
    x = np.array([[0.7, 0.2 - 0.1j], [0.2 + 0.1j, 0.3]])
    rho = DensityMatrix(ssm_element(dec0.structure, [x]))
    s = support_of(rho)
    dec = decompose(modified_generators(raw_generators(spec), s), s)
    weights = [b.weight * np.eye(b.n) for b in dec.structure.blocks]
    bar = twirl(s.rho0_restricted, dec.algebra)
    assert_allclose(ssm_element(dec.structure, weights), s.embed(bar), atol=1e-10)
    # X1 is only defined up to a unitary on the multiplicity factor
    assert_allclose(np.linalg.eigvalsh(dec.structure.blocks[0].x1), np.linalg.eigvalsh(x), atol=1e-10)


def test_pure_multiplicity_state_is_steady():
    spec, s, gens = setup(example2)
    st = decompose(gens, s).structure
    e = np.zeros((2, 2))
    e[0, 0] = 1.0
    rho = ssm_element(st, [e])
    assert abs(np.trace(rho) - 1) < 1e-12
    assert steady_residual(spec, rho) <= 1e-8
