"""Global matrix assembly vs dense scatter oracles, plus the trimap term."""

import numpy as np
import pytest
import scipy.io
import scipy.sparse

from patchmatte import imaging
from patchmatte.alignment import (AssemblyDiagnostics, apply_trimap_prior,
                                  assemble_alignment, dump_matrix)
from patchmatte.modelers import (ModelerConfig, cascade_isomap_coords,
                                 isomap_coords, le_coords, lle_center_row,
                                 patch_energy, pca_coords)
from patchmatte.patching import PatchSet, extract_patches


def random_image(rng, h=6, w=7):
    return rng.random((h, w, 3))


def dense_scatter_oracle(patches, local_blocks):
    n = patches.n_pixels
    m = np.zeros((n, n))
    for i in range(len(patches)):
        idx = patches.members[i]
        m[np.ix_(idx, idx)] += local_blocks[i]
    return 0.5 * (m + m.T)


def local_blocks_for(patches, config):
    blocks = []
    for patch in patches:
        if config.method == "pca":
            sc = pca_coords(patch.colors, config.dims[0])
        elif config.method == "le":
            sc = le_coords(patch.colors, config.dims[0], config.k,
                           config.le_sigma)
        elif config.method == "isomap":
            sc = isomap_coords(patch.colors, config.dims[0], config.k)
        else:
            sc = cascade_isomap_coords(patch.colors, config.dims, config.k)
        blocks.append(patch_energy(sc))
    return blocks


# ---------------------------------------------------------------------------
# assembly

@pytest.mark.parametrize("method", ["pca", "le", "isomap", "casiso"])
def test_assembly_matches_dense_oracle(rng, method):
    image = random_image(rng)
    patches = extract_patches(image, window=3, stride=1)
    config = ModelerConfig(method=method)
    m, diag = assemble_alignment(patches, config)
    oracle = dense_scatter_oracle(patches, local_blocks_for(patches, config))
    assert np.allclose(m.toarray(), oracle, atol=1e-12)
    assert diag.n_patches == len(patches)


def test_assembly_lle_matches_dense_rows(rng):
    image = random_image(rng)
    patches = extract_patches(image, window=3, stride=1)
    config = ModelerConfig(method="lle", k=4, lle_reg=1e-3)
    m, _ = assemble_alignment(patches, config)

    n = patches.n_pixels
    rows = np.zeros((len(patches), n))
    for i, patch in enumerate(patches):
        center_local = int(np.flatnonzero(patch.members == patch.center)[0])
        neigh, w = lle_center_row(patch.colors, center_local, k=4, reg=1e-3)
        rows[i, patch.center] += 1.0
        np.add.at(rows[i], patch.members[neigh], -w)
    oracle = rows.T @ rows
    assert np.allclose(m.toarray(), oracle, atol=1e-12)


@pytest.mark.parametrize("method", ["pca", "lle", "le", "isomap", "casiso"])
def test_assembly_global_contracts(rng, method):
    image = random_image(rng, 7, 6)
    patches = extract_patches(image, window=3, stride=1)
    m, _ = assemble_alignment(patches, ModelerConfig(method=method))
    dense = m.toarray()
    assert np.array_equal(dense, dense.T)            # exact symmetry
    norm = np.abs(np.linalg.eigvalsh(dense)).max()
    assert np.linalg.eigvalsh(dense).min() >= -1e-8 * norm
    ones = np.ones(patches.n_pixels)
    assert np.abs(dense @ ones).max() <= 1e-8 * norm


def test_assembly_stride_two_shape_and_oracle(rng):
    image = random_image(rng, 7, 7)
    patches = extract_patches(image, window=3, stride=2)
    config = ModelerConfig(method="pca")
    m, diag = assemble_alignment(patches, config)
    assert m.shape == (49, 49)
    oracle = dense_scatter_oracle(patches, local_blocks_for(patches, config))
    assert np.allclose(m.toarray(), oracle, atol=1e-12)


def test_assembly_constant_image_degenerate_counts():
    image = np.full((5, 5, 3), 0.4)
    patches = extract_patches(image, window=3, stride=1)
    m, diag = assemble_alignment(patches, ModelerConfig(method="isomap"))
    assert diag.degenerate == len(patches)
    assert diag.padded_rows == 2 * len(patches)
    assert "degenerate=" in diag.summary()
    # every block degenerates to the centering projector, so M stays useful
    assert m.nnz > 0


def test_assembly_counts_repaired_edges():
    # one hand-built patch whose k=1 neighbor graph splits into two camps
    colors = np.zeros((1, 3, 9))
    colors[0, :, :4] = np.linspace(0.0, 0.03, 4)
    colors[0, :, 4:] = np.linspace(0.9, 0.94, 5)
    patches = PatchSet(members=np.arange(9, dtype=np.int32)[None, :],
                       centers=np.array([4], dtype=np.int32),
                       colors=colors, image_shape=(3, 3), window=3, stride=1)
    _, diag = assemble_alignment(patches, ModelerConfig(method="isomap", k=1))
    assert diag.repaired_edges >= 1


def test_assembly_rejects_invalid_config(rng):
    patches = extract_patches(random_image(rng, 5, 5), window=3, stride=1)
    with pytest.raises(ValueError):
        assemble_alignment(patches, ModelerConfig(method="isomap", k=9))


def test_diagnostics_summary_format():
    diag = AssemblyDiagnostics(n_patches=3, degenerate=1, padded_rows=2,
                               repaired_edges=4)
    assert diag.summary() == "patches=3 degenerate=1 padded=2 repaired=4"


# ---------------------------------------------------------------------------
# trimap prior

def make_labels():
    return np.array([[imaging.FOREGROUND, imaging.UNKNOWN],
                     [imaging.BACKGROUND, imaging.FOREGROUND]], dtype=np.uint8)


def small_psd_matrix(rng, n):
    g = rng.standard_normal((n, n))
    m = g @ g.T
    m -= np.outer(m.sum(axis=1), np.ones(n)) / n  # not needed to be special
    return scipy.sparse.csr_matrix(0.5 * (m + m.T))


def test_prior_objective_matches_brute_force(rng):
    m = small_psd_matrix(rng, 4)
    labels = make_labels()
    lam = 7.5
    problem = apply_trimap_prior(m, labels, lam=lam)
    flat = labels.ravel()
    goal = (flat == imaging.FOREGROUND).astype(float)
    known = flat != imaging.UNKNOWN
    for _ in range(10):
        x = rng.random(4)
        brute = float(x @ m.toarray() @ x
                      + lam * ((x - goal)[known] ** 2).sum())
        assert abs(problem.objective(x) - brute) < 1e-10


def test_prior_gradient_matches_brute_force(rng):
    m = small_psd_matrix(rng, 4)
    labels = make_labels()
    lam = 3.0
    problem = apply_trimap_prior(m, labels, lam=lam)
    flat = labels.ravel()
    goal = (flat == imaging.FOREGROUND).astype(float)
    known = (flat != imaging.UNKNOWN).astype(float)
    x = rng.random(4)
    brute = 2.0 * m.toarray() @ x + 2.0 * lam * known * (x - goal)
    assert np.allclose(problem.gradient(x), brute, atol=1e-12)


def test_prior_known_mask_and_values():
    m = scipy.sparse.identity(4, format="csr")
    problem = apply_trimap_prior(m, make_labels(), lam=2.0)
    assert problem.known_mask.tolist() == [True, False, True, True]
    assert problem.known_values.tolist() == [1.0, 0.0, 0.0, 1.0]
    assert problem.constant == 2.0 * 2   # lam times number of foreground pixels


def test_prior_all_unknown_leaves_matrix_alone(rng):
    m = small_psd_matrix(rng, 4)
    labels = np.full(4, imaging.UNKNOWN, dtype=np.uint8)
    problem = apply_trimap_prior(m, labels, lam=100.0)
    assert np.allclose(problem.matrix.toarray(), m.toarray())
    assert np.array_equal(problem.linear, np.zeros(4))
    assert problem.constant == 0.0


def test_prior_zero_strength_is_no_op(rng):
    m = small_psd_matrix(rng, 4)
    problem = apply_trimap_prior(m, make_labels(), lam=0.0)
    x = rng.random(4)
    assert abs(problem.objective(x) - float(x @ m.toarray() @ x)) < 1e-12


def test_prior_validates_inputs(rng):
    m = small_psd_matrix(rng, 4)
    with pytest.raises(ValueError):
        apply_trimap_prior(m, np.zeros(5, dtype=np.uint8))
    with pytest.raises(ValueError):
        apply_trimap_prior(m, make_labels(), lam=-1.0)


def test_dump_matrix_round_trip(rng, tmp_path):
    m = small_psd_matrix(rng, 5)
    path = tmp_path / "alignment.mtx"
    dump_matrix(m, path)
    back = scipy.io.mmread(str(path))
    assert np.allclose(back.toarray(), m.toarray(), atol=1e-12)
