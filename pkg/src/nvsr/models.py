"""Model zoo: coordinate decoders, frame encoder, and the 2x upscaler block.

Four variants share one decoder skeleton.  "nerv" regresses frames from a
positional time encoding, "hnerv" from a learned per-frame embedding; the
"sr-" variants run the decoder at half resolution and append a residual
super-resolution block (SRB) that doubles the output.  Matched baseline
and SR stride lists keep the final frame size identical, which is what
makes equal-budget comparisons meaningful.
"""

import io
import struct
from dataclasses import dataclass, field, replace

import numpy as np

from . import tensor as tz
from .errors import (
    ConfigError,
    ContractError,
    DecodeError,
    InfeasibleBudgetError,
    InvalidShapeError,
    UnsupportedFormatError,
)
from .media import Frame
from .tensor import Tensor

VARIANTS = ("nerv", "hnerv", "sr-nerv", "sr-hnerv")

_CKPT_MAGIC = b"NVCK"
_CKPT_VERSION = 1


@dataclass(frozen=True)
class PEConfig:
    freq_base: float = 1.25
    num_freqs: int = 8


@dataclass(frozen=True)
class EmbeddingConfig:
    channels: int = 16


@dataclass(frozen=True)
class SRBConfig:
    channels: int = 32
    num_res_blocks: int = 4
    scale: int = 2


def default_strides(variant):
    """Desk-scale stride lists; SR lists upsample half as far."""
    return {
        "nerv": (4, 4, 2, 2),
        "hnerv": (4, 4, 2, 2),
        "sr-nerv": (4, 2, 2, 2),
        "sr-hnerv": (4, 2, 2, 2),
    }[variant]


@dataclass(frozen=True)
class ModelConfig:
    """Everything needed to build one variant deterministically."""

    variant: str
    strides: tuple = None
    base_width: int = 16
    width_decay: int = 2
    stem_hidden: int = 64
    pe: PEConfig = field(default_factory=PEConfig)
    embedding: EmbeddingConfig = field(default_factory=EmbeddingConfig)
    srb: SRBConfig = field(default_factory=SRBConfig)
    output_hw: tuple = (64, 128)

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.strides is None:
            object.__setattr__(self, "strides", default_strides(self.variant))
        object.__setattr__(self, "strides", tuple(int(s) for s in self.strides))
        if not self.strides or any(s < 1 for s in self.strides):
            raise ConfigError(f"strides must be positive ints, got {self.strides}")
        if self.base_width < 1:
            raise ConfigError(f"base_width must be >= 1, got {self.base_width}")
        if self.width_decay < 1:
            raise ConfigError(f"width_decay must be >= 1, got {self.width_decay}")
        if self.pe.num_freqs < 1 or self.pe.freq_base <= 0:
            raise ConfigError(f"bad positional encoding config {self.pe}")
        if self.srb.scale != 2:
            raise ConfigError(f"the SRB doubles resolution; scale must be 2, got {self.srb.scale}")
        object.__setattr__(self, "output_hw", tuple(int(x) for x in self.output_hw))
        h, w = self.output_hw
        if h < 1 or w < 1:
            raise ConfigError(f"output_hw must be positive, got {h}x{w}")
        if (h % self.total_scale) or (w % self.total_scale):
            raise ConfigError(
                f"output {h}x{w} not divisible by total upsampling {self.total_scale}"
            )

    @property
    def is_sr(self):
        return self.variant.startswith("sr-")

    @property
    def upsample_product(self):
        p = 1
        for s in self.strides:
            p *= s
        return p

    @property
    def total_scale(self):
        """Frame pixels per stem grid cell, SRB doubling included."""
        return self.upsample_product * (2 if self.is_sr else 1)

    @property
    def decoder_hw(self):
        h, w = self.output_hw
        if self.is_sr:
            return h // 2, w // 2
        return h, w

    @property
    def grid_hw(self):
        """Stem feature-map size h0, w0."""
        dh, dw = self.decoder_hw
        return dh // self.upsample_product, dw // self.upsample_product

    def stage_widths(self):
        """Channel plan: base width decaying by width_decay, floored at 8."""
        widths = [self.base_width]
        for _ in self.strides:
            widths.append(max(widths[-1] // self.width_decay, 8))
        return widths

    def to_text(self):
        """Canonical key=value block, sorted keys, one per line."""
        h, w = self.output_hw
        pairs = {
            "base_width": self.base_width,
            "embedding.channels": self.embedding.channels,
            "output_hw": f"{h},{w}",
            "pe.freq_base": repr(self.pe.freq_base),
            "pe.num_freqs": self.pe.num_freqs,
            "srb.channels": self.srb.channels,
            "srb.num_res_blocks": self.srb.num_res_blocks,
            "srb.scale": self.srb.scale,
            "stem_hidden": self.stem_hidden,
            "strides": ",".join(str(s) for s in self.strides),
            "variant": self.variant,
            "width_decay": self.width_decay,
        }
        return "".join(f"{k}={pairs[k]}\n" for k in sorted(pairs))

    @classmethod
    def from_text(cls, text):
        kv = {}
        for line in text.splitlines():
            line = line.strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"bad config line {line!r}")
            k, v = line.split("=", 1)
            kv[k.strip()] = v.strip()
        try:
            return cls(
                variant=kv["variant"],
                strides=tuple(int(s) for s in kv["strides"].split(",")),
                base_width=int(kv["base_width"]),
                width_decay=int(kv["width_decay"]),
                stem_hidden=int(kv["stem_hidden"]),
                pe=PEConfig(float(kv["pe.freq_base"]), int(kv["pe.num_freqs"])),
                embedding=EmbeddingConfig(int(kv["embedding.channels"])),
                srb=SRBConfig(
                    int(kv["srb.channels"]),
                    int(kv["srb.num_res_blocks"]),
                    int(kv["srb.scale"]),
                ),
                output_hw=tuple(int(x) for x in kv["output_hw"].split(",")),
            )
        except KeyError as e:
            raise ConfigError(f"config text missing key {e.args[0]!r}") from e


def check_matched_pair(baseline, sr):
    """Matched pairs: baseline stride product = 2x the SR stride product."""
    if baseline.is_sr or not sr.is_sr:
        raise ConfigError("pair must be (baseline variant, sr variant)")
    if baseline.upsample_product != 2 * sr.upsample_product:
        raise ConfigError(
            f"stride products {baseline.upsample_product} vs {sr.upsample_product} "
            "break the half-resolution match"
        )
    if baseline.output_hw != sr.output_hw:
        raise ConfigError("matched pair must share output_hw")


def positional_encode(t, pe):
    """[sin(b^i pi t), cos(b^i pi t)] interleaved for i in 0..l-1."""
    if not 0.0 <= t <= 1.0:
        raise ContractError(f"time index {t} outside [0, 1]")
    freqs = pe.freq_base ** np.arange(pe.num_freqs, dtype=np.float64)
    angles = freqs * (np.pi * t)
    out = np.empty(2 * pe.num_freqs, dtype=np.float64)
    out[0::2] = np.sin(angles)
    out[1::2] = np.cos(angles)
    return out.astype(np.float32)


class Conv:
    """3x3 or 1x1 conv parameter pair with He-style init."""

    def __init__(self, rng, cin, cout, k, stride=1, zero_init=False):
        fan_in = cin * k * k
        if zero_init:
            w = np.zeros((cout, cin, k, k), dtype=np.float32)
        else:
            std = float(np.sqrt(2.0 / fan_in))
            w = rng.normal(0.0, std, size=(cout, cin, k, k)).astype(np.float32)
        self.w = Tensor(w, trainable=True)
        self.b = Tensor(np.zeros(cout, dtype=np.float32), trainable=True)
        self.stride = stride
        self.padding = k // 2

    def __call__(self, x):
        return tz.conv2d(x, self.w, self.b, stride=self.stride, padding=self.padding)

    def named(self, prefix):
        return [(prefix + ".w", self.w), (prefix + ".b", self.b)]


class NervDecoder:
    """Stem to a coarse grid, pixel-shuffle stages, sigmoid RGB head."""

    def __init__(self, config, rng):
        self.config = config
        widths = config.stage_widths()
        h0, w0 = config.grid_hw
        if config.variant in ("nerv", "sr-nerv"):
            in_dim = 2 * config.pe.num_freqs
            self.stem1 = Conv(rng, in_dim, config.stem_hidden, 1)
            self.stem2 = Conv(rng, config.stem_hidden, widths[0] * h0 * w0, 1)
            self.stem_conv = None
        else:
            self.stem1 = self.stem2 = None
            self.stem_conv = Conv(rng, config.embedding.channels, widths[0], 3)
        self.stages = [
            Conv(rng, widths[i], widths[i + 1] * s * s, 3)
            for i, s in enumerate(config.strides)
        ]
        self.head = Conv(rng, widths[-1], 3, 3)

    def __call__(self, x):
        cfg = self.config
        h0, w0 = cfg.grid_hw
        if self.stem_conv is None:
            want = (1, 2 * cfg.pe.num_freqs, 1, 1)
            if x.shape != want:
                raise InvalidShapeError(f"decoder stem expects {want}, got {tuple(x.shape)}")
            x = tz.gelu(self.stem1(x))
            x = self.stem2(x)
            x = tz.reshape(x, (1, cfg.stage_widths()[0], h0, w0))
        else:
            want = (1, cfg.embedding.channels, h0, w0)
            if x.shape != want:
                raise InvalidShapeError(f"decoder stem expects {want}, got {tuple(x.shape)}")
            x = tz.gelu(self.stem_conv(x))
        for conv, s in zip(self.stages, cfg.strides):
            x = tz.gelu(tz.pixel_shuffle(conv(x), s))
        return tz.sigmoid(self.head(x))

    def named_params(self):
        out = []
        if self.stem_conv is None:
            out += self.stem1.named("decoder.stem1")
            out += self.stem2.named("decoder.stem2")
        else:
            out += self.stem_conv.named("decoder.stem")
        for i, c in enumerate(self.stages):
            out += c.named(f"decoder.stage{i}")
        out += self.head.named("decoder.head")
        return out


class SRModel:
    """Residual 2x upscaler.  Zero-init tail makes the untrained block an
    exact sigmoid(nearest-neighbor-2x) so it starts from a sane image."""

    def __init__(self, srb_config, rng):
        c = srb_config.channels
        self.config = srb_config
        self.head = Conv(rng, 3, c, 3)
        self.blocks = [
            (Conv(rng, c, c, 3), Conv(rng, c, c, 3, zero_init=True))
            for _ in range(srb_config.num_res_blocks)
        ]
        self.body = Conv(rng, c, c, 3)
        self.up = Conv(rng, c, 4 * c, 3)
        self.tail = Conv(rng, c, 3, 3, zero_init=True)

    def __call__(self, x):
        if x.data.ndim != 4 or x.shape[1] != 3:
            raise InvalidShapeError(f"SRB expects (1, 3, h, w), got {tuple(x.shape)}")
        h = self.head(x)
        r = h
        for c1, c2 in self.blocks:
            r = tz.add(r, c2(tz.gelu(c1(r))))
        f = tz.add(self.body(r), h)
        u = tz.pixel_shuffle(self.up(f), 2)
        return tz.sigmoid(tz.add(self.tail(u), tz.upsample2x_nearest(x)))

    def named_params(self):
        out = self.head.named("srb.head")
        for i, (c1, c2) in enumerate(self.blocks):
            out += c1.named(f"srb.block{i}.c1")
            out += c2.named(f"srb.block{i}.c2")
        out += self.body.named("srb.body")
        out += self.up.named("srb.up")
        out += self.tail.named("srb.tail")
        return out


class HnervEncoder:
    """Strided conv stack squeezing a frame into the decoder's stem grid."""

    def __init__(self, config, rng):
        self.config = config
        e = config.embedding.channels
        strides = list(config.strides) + ([2] if config.is_sr else [])
        chans = [3] + [e] * len(strides)
        self.stages = [
            Conv(rng, chans[i], chans[i + 1], 3, stride=s) for i, s in enumerate(strides)
        ]

    def __call__(self, x):
        h, w = self.config.output_hw
        if x.shape != (1, 3, h, w):
            raise InvalidShapeError(f"encoder expects (1, 3, {h}, {w}), got {tuple(x.shape)}")
        for i, conv in enumerate(self.stages):
            x = conv(x)
            if i < len(self.stages) - 1:
                x = tz.gelu(x)
        return x

    def named_params(self):
        out = []
        for i, c in enumerate(self.stages):
            out += c.named(f"encoder.stage{i}")
        return out


class VideoModel:
    """One variant wired together: optional encoder, decoder, optional SRB."""

    def __init__(self, config, seed):
        self.config = config
        self.seed = int(seed)
        rng = np.random.default_rng([int(seed), 0x5EED])
        self.decoder = NervDecoder(config, rng)
        self.srb = SRModel(config.srb, rng) if config.is_sr else None
        self.encoder = (
            HnervEncoder(config, rng) if config.variant in ("hnerv", "sr-hnerv") else None
        )

    def forward(self, t=None, frame=None):
        """Decode from a time stamp (nerv) or a source frame (hnerv)."""
        cfg = self.config
        if self.encoder is None:
            if t is None:
                raise ContractError(f"variant {cfg.variant} decodes from a time index")
            vec = positional_encode(t, cfg.pe)
            z = Tensor(vec.reshape(1, -1, 1, 1))
        else:
            if frame is None:
                raise ContractError(f"variant {cfg.variant} decodes from a source frame")
            z = self.encoder(Tensor(frame.data[None]))
        out = self.decoder(z)
        if self.srb is not None:
            out = self.srb(out)
        return out

    def named_params(self):
        out = list(self.decoder.named_params())
        if self.srb is not None:
            out += self.srb.named_params()
        if self.encoder is not None:
            out += self.encoder.named_params()
        return out

    def param_groups(self):
        """name -> tensors; the srb group is the freeze target."""
        groups = {"decoder": [p for _, p in self.decoder.named_params()]}
        if self.encoder is not None:
            groups["decoder"] += [p for _, p in self.encoder.named_params()]
        if self.srb is not None:
            groups["srb"] = [p for _, p in self.srb.named_params()]
        return groups

    def load_srb_params(self, srb):
        """Adopt a pre-trained SRB's weights (copied, shapes checked)."""
        if self.srb is None:
            raise ContractError(f"variant {self.config.variant} has no SRB")
        mine = dict(self.srb.named_params())
        for name, p in srb.named_params():
            if name not in mine or mine[name].data.shape != p.data.shape:
                raise ContractError(f"SRB parameter {name} does not match this config")
            mine[name].data[...] = p.data


def reconstruct_frame(model, t=None, frame=None):
    """Forward pass wrapped back into an immutable Frame."""
    out = model.forward(t=t, frame=frame)
    h, w = model.config.output_hw
    if out.shape != (1, 3, h, w):
        raise InvalidShapeError(f"reconstruction is {tuple(out.shape)}, expected (1, 3, {h}, {w})")
    return Frame(out.data[0])


def param_count(model):
    """Exact parameter counts; encoder reported separately from the total."""
    dec = sum(p.size for _, p in model.decoder.named_params())
    srb = sum(p.size for _, p in model.srb.named_params()) if model.srb else 0
    enc = sum(p.size for _, p in model.encoder.named_params()) if model.encoder else 0
    return {"total": dec + srb, "decoder": dec, "srb": srb, "encoder": enc}


def _conv_count(cin, cout, k):
    return cout * cin * k * k + cout


def decoder_param_count(config):
    """Pure arithmetic mirror of NervDecoder's allocation."""
    widths = config.stage_widths()
    h0, w0 = config.grid_hw
    total = 0
    if config.variant in ("nerv", "sr-nerv"):
        total += _conv_count(2 * config.pe.num_freqs, config.stem_hidden, 1)
        total += _conv_count(config.stem_hidden, widths[0] * h0 * w0, 1)
    else:
        total += _conv_count(config.embedding.channels, widths[0], 3)
    for i, s in enumerate(config.strides):
        total += _conv_count(widths[i], widths[i + 1] * s * s, 3)
    total += _conv_count(widths[-1], 3, 3)
    return total


def srb_param_count(srb_config):
    c = srb_config.channels
    total = _conv_count(3, c, 3)
    total += srb_config.num_res_blocks * 2 * _conv_count(c, c, 3)
    total += _conv_count(c, c, 3)
    total += _conv_count(c, 4 * c, 3)
    total += _conv_count(c, 3, 3)
    return total


def encoder_param_count(config):
    e = config.embedding.channels
    n_stages = len(config.strides) + (1 if config.is_sr else 0)
    total = _conv_count(3, e, 3)
    total += (n_stages - 1) * _conv_count(e, e, 3)
    return total


def total_param_count(config):
    """Decoder plus SRB; the reported model size for all four variants."""
    total = decoder_param_count(config)
    if config.is_sr:
        total += srb_param_count(config.srb)
    return total


def solve_width_for_budget(config, budget):
    """Largest base_width with total params <= 1.02 * budget.

    The SRB config is fixed first for SR variants; only the decoder width
    moves.  Raises if even width 4 overshoots.
    """
    limit = budget * 1.02
    if total_param_count(replace(config, base_width=4)) > limit:
        raise InfeasibleBudgetError(
            f"budget {budget} infeasible for {config.variant} even at width 4"
        )
    width = 4
    while total_param_count(replace(config, base_width=width + 1)) <= limit:
        width += 1
    return width


def save_checkpoint(path, config, tensors):
    """Write config text plus named float32 tensors; names sorted."""
    buf = io.BytesIO()
    buf.write(_CKPT_MAGIC)
    buf.write(struct.pack("<I", _CKPT_VERSION))
    cfg_bytes = config.to_text().encode("utf-8")
    buf.write(struct.pack("<I", len(cfg_bytes)))
    buf.write(cfg_bytes)
    buf.write(struct.pack("<I", len(tensors)))
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name], dtype="<f4")
        nb = name.encode("utf-8")
        buf.write(struct.pack("<I", len(nb)))
        buf.write(nb)
        buf.write(struct.pack("<I", arr.ndim))
        buf.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
        buf.write(arr.tobytes())
    with open(path, "wb") as fh:
        fh.write(buf.getvalue())


def load_checkpoint(path):
    """Inverse of save_checkpoint -> (ModelConfig, {name: float32 array})."""
    raw = open(path, "rb").read()

    def need(n, offset):
        if offset + n > len(raw):
            raise DecodeError(f"{path} truncated", path=str(path), offset=len(raw))
        return offset + n

    if len(raw) < 4 or raw[:4] != _CKPT_MAGIC:
        raise DecodeError(f"{path} has wrong checkpoint magic", path=str(path), offset=0)
    off = need(4, 4)
    (version,) = struct.unpack_from("<I", raw, 4)
    if version != _CKPT_VERSION:
        raise UnsupportedFormatError(f"{path}: checkpoint version {version} not supported")
    off = need(4, off)
    (cfg_len,) = struct.unpack_from("<I", raw, off - 4)
    cfg_end = need(cfg_len, off)
    config = ModelConfig.from_text(raw[off:cfg_end].decode("utf-8"))
    off = need(4, cfg_end)
    (count,) = struct.unpack_from("<I", raw, off - 4)
    tensors = {}
    for _ in range(count):
        off = need(4, off)
        (name_len,) = struct.unpack_from("<I", raw, off - 4)
        name_end = need(name_len, off)
        name = raw[off:name_end].decode("utf-8")
        off = need(4, name_end)
        (rank,) = struct.unpack_from("<I", raw, off - 4)
        shape_end = need(4 * rank, off)
        shape = struct.unpack_from(f"<{rank}I", raw, off)
        nbytes = 4 * int(np.prod(shape, dtype=np.int64)) if rank else 4
        data_end = need(nbytes, shape_end)
        flat = np.frombuffer(raw[shape_end:data_end], dtype="<f4")
        tensors[name] = flat.reshape(shape).copy()
        off = data_end
    if off != len(raw):
        raise DecodeError(f"{path} has trailing bytes", path=str(path), offset=off)
    return config, tensors


def save_model(model, path, extra=None):
    """Model weights (+ any extra named tensors, e.g. optimizer state)."""
    tensors = {name: p.data for name, p in model.named_params()}
    for name, arr in (extra or {}).items():
        if name in tensors:
            raise ContractError(f"extra tensor name {name!r} collides with a parameter")
        tensors[name] = arr
    save_checkpoint(path, model.config, tensors)


def load_model(path):
    """Rebuild a VideoModel from a checkpoint -> (model, extra tensors)."""
    config, tensors = load_checkpoint(path)
    model = VideoModel(config, seed=0)
    extra = {}
    params = dict(model.named_params())
    for name, arr in tensors.items():
        if name in params:
            if params[name].data.shape != arr.shape:
                raise DecodeError(
                    f"{path}: tensor {name} has shape {arr.shape}, "
                    f"model expects {params[name].data.shape}",
                    path=str(path),
                )
            params[name].data[...] = arr
        else:
            extra[name] = arr
    missing = set(params) - set(tensors)
    if missing:
        raise DecodeError(
            f"{path} is missing parameters: {sorted(missing)[:3]}...", path=str(path)
        )
    return model, extra


def save_srb(srb, path):
    """Bare SRB artifact; a carrier config records only the block settings."""
    carrier = ModelConfig(variant="sr-nerv", srb=srb.config)
    save_checkpoint(path, carrier, {name: p.data for name, p in srb.named_params()})


def load_srb(path):
    """Rebuild a bare SRModel written by save_srb."""
    config, tensors = load_checkpoint(path)
    srb = SRModel(config.srb, np.random.default_rng(0))
    params = dict(srb.named_params())
    if set(tensors) != set(params):
        raise DecodeError(f"{path} is not a bare SRB artifact", path=str(path))
    for name, arr in tensors.items():
        if params[name].data.shape != arr.shape:
            raise DecodeError(
                f"{path}: tensor {name} has shape {arr.shape}, "
                f"block expects {params[name].data.shape}",
                path=str(path),
            )
        params[name].data[...] = arr
    return srb
