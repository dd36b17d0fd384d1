"""Byte-exact sealing and opening of tunnel packets.

Wire layout: tag(20) || iv(16) || ciphertext(16n). The tag is
HMAC-SHA1(auth_key, iv || ciphertext); the ciphertext is AES-128-CBC over
the PKCS#7-padded record. Encrypt-then-MAC: forgeries are rejected before
any decryption happens. The sequence number lives inside the encrypted
record, so it is both confidential and authenticated.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass
from enum import IntEnum

from cryptography.hazmat.primitives.ciphers import Cipher, algorithms, modes

from .errors import AuthError, FormatError, PaddingError, SizeError

CIPHER_KEY_LEN = 16
AUTH_KEY_LEN = 20
TAG_LEN = 20
IV_LEN = 16
BLOCK = 16
RECORD_HEADER_LEN = 6  # msg_type(1) + seq(4, big-endian) + comp_flag(1)
MAX_BODY = 65535
MAX_CIPHERTEXT = 65535
MIN_WIRE = TAG_LEN + IV_LEN + BLOCK  # 52
KEY_FILE_HEX_CHARS = 2 * (CIPHER_KEY_LEN + AUTH_KEY_LEN)  # 72

PING_BODY = b"\x2a" * 16


class MsgType(IntEnum):
    DATA = 0x00
    PING = 0x01


class CompFlag(IntEnum):
    RAW = 0x00
    COMPRESSED = 0x01


@dataclass(frozen=True)
class StaticKey:
    """Pre-shared cipher and auth key material, same key both directions."""

    cipher_key: bytes
    auth_key: bytes

    def __post_init__(self):
        if len(self.cipher_key) != CIPHER_KEY_LEN:
            raise FormatError(f"cipher_key must be {CIPHER_KEY_LEN} bytes")
        if len(self.auth_key) != AUTH_KEY_LEN:
            raise FormatError(f"auth_key must be {AUTH_KEY_LEN} bytes")


@dataclass(frozen=True)
class PlainRecord:
    msg_type: MsgType
    seq: int
    comp_flag: CompFlag
    body: bytes

    def __post_init__(self):
        if not 0 <= self.seq <= 0xFFFFFFFF:
            raise FormatError("seq out of 32-bit range")
        if len(self.body) > MAX_BODY:
            raise FormatError("body exceeds 65535 bytes")
        if self.msg_type is MsgType.PING:
            if self.body != PING_BODY or self.comp_flag is not CompFlag.RAW:
                raise FormatError("ping records carry the fixed raw magic body")


@dataclass(frozen=True)
class WirePacket:
    tag: bytes
    iv: bytes
    ciphertext: bytes

    def to_bytes(self) -> bytes:
        return self.tag + self.iv + self.ciphertext


def parse_key_file(text: str) -> StaticKey:
    """Parse a 72-hex-char static key file ('#' comment lines ignored)."""
    hex_chars = "".join(
        line.split("#", 1)[0] for line in text.splitlines()
    )
    hex_chars = "".join(hex_chars.split())
    if len(hex_chars) != KEY_FILE_HEX_CHARS:
        raise FormatError(
            f"key file must contain exactly {KEY_FILE_HEX_CHARS} hex characters, "
            f"got {len(hex_chars)}"
        )
    try:
        raw = bytes.fromhex(hex_chars)
    except ValueError as exc:
        raise FormatError("non-hex character in key file") from exc
    return StaticKey(raw[:CIPHER_KEY_LEN], raw[CIPHER_KEY_LEN:])


def format_key_file(key: StaticKey) -> str:
    """Inverse of parse_key_file, with a comment header."""
    return (
        "# tunbench static key\n"
        "# 16-byte AES-128 cipher key followed by 20-byte HMAC-SHA1 auth key\n"
        f"{key.cipher_key.hex()}\n{key.auth_key.hex()}\n"
    )


def serialize_record(record: PlainRecord) -> bytes:
    return (
        bytes([record.msg_type])
        + record.seq.to_bytes(4, "big")
        + bytes([record.comp_flag])
        + record.body
    )


def parse_record(data: bytes) -> PlainRecord:
    if len(data) < RECORD_HEADER_LEN:
        raise FormatError("record shorter than header")
    try:
        msg_type = MsgType(data[0])
        comp_flag = CompFlag(data[5])
    except ValueError as exc:
        raise FormatError("unknown msg_type or comp_flag byte") from exc
    seq = int.from_bytes(data[1:5], "big")
    return PlainRecord(msg_type, seq, comp_flag, data[RECORD_HEADER_LEN:])


def _pkcs7_pad(data: bytes) -> bytes:
    n = BLOCK - (len(data) % BLOCK)
    return data + bytes([n]) * n


def _pkcs7_unpad(data: bytes) -> bytes:
    if not data:
        raise PaddingError("empty plaintext")
    n = data[-1]
    if not 1 <= n <= BLOCK or len(data) < n or data[-n:] != bytes([n]) * n:
        raise PaddingError("invalid PKCS#7 padding")
    return data[:-n]


def ciphertext_len(body_len: int) -> int:
    """Exact sealed ciphertext length for a record with a body of body_len."""
    return ((RECORD_HEADER_LEN + body_len) // BLOCK + 1) * BLOCK


def _aes_cbc(key: bytes, iv: bytes, data: bytes, encrypt: bool) -> bytes:
    cipher = Cipher(algorithms.AES(key), modes.CBC(iv))
    ctx = cipher.encryptor() if encrypt else cipher.decryptor()
    return ctx.update(data) + ctx.finalize()


def _tag(key: StaticKey, iv: bytes, ciphertext: bytes) -> bytes:
    return hmac.new(key.auth_key, iv + ciphertext, hashlib.sha1).digest()


def seal(record: PlainRecord, key: StaticKey, iv: bytes) -> WirePacket:
    """Encrypt-then-MAC a record. Deterministic given (record, key, iv)."""
    if len(iv) != IV_LEN:
        raise FormatError(f"iv must be {IV_LEN} bytes")
    padded = _pkcs7_pad(serialize_record(record))
    if len(padded) > MAX_CIPHERTEXT:
        raise SizeError("padded plaintext exceeds ciphertext cap")
    ciphertext = _aes_cbc(key.cipher_key, iv, padded, encrypt=True)
    return WirePacket(_tag(key, iv, ciphertext), iv, ciphertext)


def open_packet(packet_bytes: bytes, key: StaticKey) -> PlainRecord:
    """Verify and decrypt a wire packet. Auth is checked before decryption."""
    if len(packet_bytes) < MIN_WIRE:
        raise FormatError(f"packet shorter than {MIN_WIRE} bytes")
    tag = packet_bytes[:TAG_LEN]
    iv = packet_bytes[TAG_LEN:TAG_LEN + IV_LEN]
    ciphertext = packet_bytes[TAG_LEN + IV_LEN:]
    if len(ciphertext) % BLOCK != 0:
        raise FormatError("ciphertext not a multiple of the block size")
    if not hmac.compare_digest(tag, _tag(key, iv, ciphertext)):
        raise AuthError("tag mismatch")
    padded = _aes_cbc(key.cipher_key, iv, ciphertext, encrypt=False)
    return parse_record(_pkcs7_unpad(padded))
