"""Regenerate the FCIDUMP fixtures in src/vqehpc/data with pySCF.

pySCF is only needed here; the package itself reads the written files.
Reference energies (pySCF FCI/CISD, total including core) are written next
to the fixtures so tests can cross-check our exact solver against them.
"""
import json
from pathlib import Path

from pyscf import ao2mo, ci, fci, gto, mcscf, scf
from pyscf.tools import fcidump

OUT = Path(__file__).resolve().parents[1] / "src" / "vqehpc" / "data"


def _write(name, mf, h1, eri, ecore, norb, nelec, refs):
    path = OUT / f"{name}.fcidump"
    eri = ao2mo.restore(8, eri, norb)
    fcidump.from_integrals(str(path), h1, eri, norb, nelec, ecore, tol=1e-12)
    refs[name] = {"norb": norb, "nelec": nelec}
    e_fci = fci.direct_spin1.FCI().kernel(h1, ao2mo.restore(1, eri, norb), norb, nelec, ecore=ecore)[0]
    refs[name]["fci"] = float(e_fci)


def main():
    refs = {}

    for name, atom, basis in [
        ("h2_sto3g", "H 0 0 0; H 0 0 0.7414", "sto-3g"),
        ("h2_631g", "H 0 0 0; H 0 0 0.7414", "6-31g"),
        ("h4_sto3g", "H 0 0 0; H 0 0 1.0; H 0 0 2.0; H 0 0 3.0", "sto-3g"),
    ]:
        mol = gto.M(atom=atom, basis=basis, verbose=0)
        mf = scf.RHF(mol).run()
        c = mf.mo_coeff
        h1 = c.T @ mf.get_hcore() @ c
        eri = ao2mo.kernel(mol, c)
        norb = c.shape[1]
        _write(name, mf, h1, eri, mol.energy_nuc(), norb, mol.nelectron, refs)
        refs[name]["hf"] = float(mf.e_tot)
        refs[name]["cisd"] = float(ci.CISD(mf).run().e_tot)

    # LiH with a 2-electron / 3-orbital active space around the HOMO (6 qubits)
    mol = gto.M(atom="Li 0 0 0; H 0 0 1.595", basis="sto-3g", verbose=0)
    mf = scf.RHF(mol).run()
    cas = mcscf.CASCI(mf, 3, 2)
    h1, ecore = cas.get_h1eff()
    eri = cas.get_h2eff()
    _write("lih_cas3", mf, h1, eri, ecore, 3, 2, refs)

    (OUT / "reference_energies.json").write_text(json.dumps(refs, indent=2) + "\n")


if __name__ == "__main__":
    main()
