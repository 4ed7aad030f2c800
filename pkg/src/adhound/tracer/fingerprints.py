"""Remote access type inference.

The destination side of every remote access leaves a characteristic
combination of logon type, service principal name prefix, session root image
and broker (creator) image. The table below maps those observables back to
the access channel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

ACCESS_TYPES = ("RDP", "SSH", "WinRM", "WMI", "RPC", "PsExec", "SMB",
                "WebRequest", "Local", "Service", "Unknown")


@dataclass(frozen=True)
class Fingerprint:
    access_type: str
    spn_prefixes: frozenset = frozenset()
    root_images: frozenset = frozenset()
    creator_images: frozenset = frozenset()
    requires_no_root: bool = False
    requires_virtual_byproduct: bool = False


# checked in order; first full match wins
DEFAULT_FINGERPRINTS = (
    Fingerprint("SSH", spn_prefixes=frozenset({"host"}),
                creator_images=frozenset({"sshd.exe"}),
                requires_virtual_byproduct=True),
    Fingerprint("WinRM", spn_prefixes=frozenset({"HTTP"}),
                root_images=frozenset({"wsmprovhost.exe"})),
    Fingerprint("WMI", spn_prefixes=frozenset({"WMI"}),
                creator_images=frozenset({"wmiprvse.exe"})),
    Fingerprint("RPC", spn_prefixes=frozenset({"RPC"}),
                root_images=frozenset({"dllhost.exe"})),
    Fingerprint("PsExec", spn_prefixes=frozenset({"cifs"}),
                creator_images=frozenset({"psexesvc.exe"})),
    Fingerprint("SMB", spn_prefixes=frozenset({"cifs"}),
                requires_no_root=True),
)

# image paths that stand for the kernel rather than a real session root
KERNEL_IMAGES = frozenset({"ntoskrnl.exe", "system"})


@dataclass
class SessionObservables:
    """What the destination host recorded about one inbound session."""

    logon_type: Optional[str] = None
    logon_kind: Optional[str] = None
    spn_prefix: Optional[str] = None
    root_image: Optional[str] = None
    creator_image: Optional[str] = None
    has_virtual_byproduct: bool = False
    carved_web: bool = False


def _matches(fp: Fingerprint, obs: SessionObservables) -> bool:
    if fp.spn_prefixes and obs.spn_prefix not in fp.spn_prefixes:
        return False
    if fp.root_images and obs.root_image not in fp.root_images:
        return False
    if fp.creator_images and obs.creator_image not in fp.creator_images:
        return False
    if fp.requires_no_root and obs.root_image is not None:
        return False
    if fp.requires_virtual_byproduct and not obs.has_virtual_byproduct:
        return False
    return True


def spn_prefix(target_service: Optional[str]) -> Optional[str]:
    if not target_service:
        return None
    return target_service.split("/", 1)[0]


def classify(obs: SessionObservables,
             fingerprints=DEFAULT_FINGERPRINTS) -> str:
    if obs.carved_web:
        return "WebRequest"
    if obs.logon_kind == "reconnect" or obs.logon_type == "remote_interactive":
        return "RDP"
    if obs.logon_type == "interactive":
        return "Local"
    if obs.logon_type in ("service", "batch"):
        return "Service"
    root = obs.root_image
    if root in KERNEL_IMAGES:
        obs = SessionObservables(**{**obs.__dict__, "root_image": None})
    for fp in fingerprints:
        if _matches(fp, obs):
            return fp.access_type
    # partial fallback: trust the SPN prefix alone
    for fp in fingerprints:
        if fp.spn_prefixes and obs.spn_prefix in fp.spn_prefixes:
            return fp.access_type
    return "Unknown"
