/**
 * Scope-managed device handles over the xio CLI.
 *
 * Every method is one CLI invocation; state therefore lives on the
 * device behind the identifier (a file image persists across calls, a
 * ram: namespace only within one call). Handles enforce the library's
 * single-owner rule with a reentrancy guard and are released by
 * close(), by withDevice() on scope exit, or by `await using`.
 */

import { mkdtemp, readFile, rm, writeFile } from "node:fs/promises";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { BusyError, ClosedError, InvalidArgumentError } from "./errors.js";
import { runXio, runXioJson } from "./cli.js";
import type { Geometry, ZoneReport } from "./wire.js";

let openHandles = 0;

/** Live handle count; zero once every scope has exited (leak tests). */
export function openHandleCount(): number {
	return openHandles;
}

/** Options accepted by Device.open, camelCased per host conventions. */
export interface DeviceOptions {
	beAsync?: string;
	beSync?: string;
	fileLbads?: number;
	thrpoolWorkers?: number;
	thrpoolPending?: number;
	ramPending?: number;
	/** Escape hatch for raw option keys. */
	extra?: Record<string, string>;
}

const OPTION_KEYS: Array<[keyof DeviceOptions, string]> = [
	["beAsync", "be.async"],
	["beSync", "be.sync"],
	["fileLbads", "file.lbads"],
	["thrpoolWorkers", "thrpool.workers"],
	["thrpoolPending", "thrpool.pending"],
	["ramPending", "ram.pending"],
];

function optionArgs(options: DeviceOptions): string[] {
	const args: string[] = [];
	for (const [prop, key] of OPTION_KEYS) {
		const value = options[prop];
		if (value !== undefined) {
			args.push("--opt", `${key}=${value}`);
		}
	}
	for (const [key, value] of Object.entries(options.extra ?? {})) {
		args.push("--opt", `${key}=${value}`);
	}
	return args;
}

interface InfoPayload {
	uri: string;
	backend: string;
	geometry: {
		lba_nbytes: number;
		nsect: number;
		nzones: number;
		zone_nsect: number;
		kind: "conventional" | "zoned";
	};
}

export interface BenchOptions {
	qd?: number;
	nblocks?: number;
	ops?: number;
	mode?: "randread" | "randwrite" | "seqread" | "seqwrite";
	seed?: number;
}

export interface BenchReport {
	ops: number;
	completions: number;
	errors: number;
	elapsed_ns: number;
	iops: number;
	bytes_per_sec: number;
	latency_ns: { p50: number; p99: number; p999: number; max: number };
}

export class Device {
	readonly ident: string;
	readonly backend: string;
	readonly geometry: Geometry;

	private readonly optArgs: string[];
	private closed = false;
	private inflight = false;
	private workDir: string | null = null;

	private constructor(ident: string, backend: string, geometry: Geometry,
		optArgs: string[]) {
		this.ident = ident;
		this.backend = backend;
		this.geometry = geometry;
		this.optArgs = optArgs;
	}

	/** Open a device identifier; geometry is captured once and frozen. */
	static async open(ident: string, options: DeviceOptions = {}): Promise<Device> {
		const optArgs = optionArgs(options);
		const info = await runXioJson<InfoPayload>(["info", ident, ...optArgs]);
		const geo = info.geometry;
		const device = new Device(ident, info.backend, {
			lbaNbytes: geo.lba_nbytes,
			nsect: geo.nsect,
			nzones: geo.nzones,
			zoneNsect: geo.zone_nsect,
			kind: geo.kind,
		}, optArgs);
		openHandles += 1;
		return device;
	}

	get isOpen(): boolean {
		return !this.closed;
	}

	private checkOpen(): void {
		if (this.closed) {
			throw new ClosedError(`device ${this.ident} is closed`);
		}
	}

	private async exclusive<T>(fn: () => Promise<T>): Promise<T> {
		this.checkOpen();
		if (this.inflight) {
			throw new BusyError(
				"device handle already has an operation in flight (single-owner rule)",
			);
		}
		this.inflight = true;
		try {
			return await fn();
		} finally {
			this.inflight = false;
		}
	}

	private async scratch(name: string): Promise<string> {
		if (this.workDir === null) {
			this.workDir = await mkdtemp(join(tmpdir(), "crossio-"));
		}
		return join(this.workDir, name);
	}

	/** Read nblocks starting at slba; returns exactly the block bytes. */
	async read(slba: number, nblocks: number): Promise<Uint8Array> {
		if (!Number.isInteger(slba) || slba < 0 || !Number.isInteger(nblocks) || nblocks < 1) {
			throw new InvalidArgumentError("slba/nblocks must be non-negative integers (nblocks >= 1)");
		}
		return this.exclusive(async () => {
			const out = await this.scratch("read.bin");
			await runXio([
				"read", this.ident, ...this.optArgs,
				"--slba", String(slba), "--nblocks", String(nblocks),
				"--output", out,
			]);
			return new Uint8Array(await readFile(out));
		});
	}

	/** Write whole blocks at slba; data length must be a multiple of
	 * the block size (the binding does not pad silently). */
	async write(slba: number, data: Uint8Array): Promise<void> {
		if (!Number.isInteger(slba) || slba < 0) {
			throw new InvalidArgumentError("slba must be a non-negative integer");
		}
		if (data.length === 0 || data.length % this.geometry.lbaNbytes !== 0) {
			throw new InvalidArgumentError(
				`data length ${data.length} is not a positive multiple of ` +
				`lbaNbytes=${this.geometry.lbaNbytes}`,
			);
		}
		await this.exclusive(async () => {
			const src = await this.scratch("write.bin");
			await writeFile(src, data);
			await runXio([
				"write", this.ident, ...this.optArgs,
				"--slba", String(slba), "--input", src,
			]);
		});
	}

	async zoneReport(): Promise<ZoneReport> {
		return this.exclusive(() =>
			runXioJson<ZoneReport>(["zone", "report", this.ident, ...this.optArgs]),
		);
	}

	async zoneReset(zslba: number): Promise<void> {
		await this.exclusive(() =>
			runXio(["zone", "reset", this.ident, ...this.optArgs,
				"--zslba", String(zslba)]),
		);
	}

	/** Append whole blocks to the zone at zslba; resolves to the LBA
	 * the device assigned. */
	async zoneAppend(zslba: number, data: Uint8Array): Promise<number> {
		if (data.length === 0 || data.length % this.geometry.lbaNbytes !== 0) {
			throw new InvalidArgumentError(
				`data length ${data.length} is not a positive multiple of ` +
				`lbaNbytes=${this.geometry.lbaNbytes}`,
			);
		}
		return this.exclusive(async () => {
			const src = await this.scratch("append.bin");
			await writeFile(src, data);
			const payload = await runXioJson<{ append: { result_slba: number } }>([
				"zone", "append", this.ident, ...this.optArgs,
				"--zslba", String(zslba), "--input", src,
			]);
			return payload.append.result_slba;
		});
	}

	/** Seeded micro-benchmark at fixed queue depth. */
	async bench(options: BenchOptions = {}): Promise<BenchReport> {
		return this.exclusive(() => {
			const args = ["bench", this.ident, ...this.optArgs];
			if (options.qd !== undefined) args.push("--qd", String(options.qd));
			if (options.nblocks !== undefined) args.push("--nblocks", String(options.nblocks));
			if (options.ops !== undefined) args.push("--ops", String(options.ops));
			if (options.mode !== undefined) args.push("--mode", options.mode);
			if (options.seed !== undefined) args.push("--seed", String(options.seed));
			return runXioJson<BenchReport>(args);
		});
	}

	/** Release the handle; idempotent. Further use throws ClosedError. */
	async close(): Promise<void> {
		if (this.closed) {
			return;
		}
		this.closed = true;
		openHandles -= 1;
		if (this.workDir !== null) {
			await rm(this.workDir, { recursive: true, force: true });
			this.workDir = null;
		}
	}
}

// `await using device = await Device.open(...)` on runtimes that ship
// explicit resource management; withDevice() is the portable spelling.
const asyncDispose: symbol | undefined = (Symbol as { asyncDispose?: symbol })
	.asyncDispose;
if (asyncDispose !== undefined) {
	Object.defineProperty(Device.prototype, asyncDispose, {
		value(this: Device) {
			return this.close();
		},
	});
}

/**
 * Run `fn` with an open device and close it on the way out, exception
 * or not — the scope-managed way to hold a handle.
 */
export async function withDevice<T>(
	ident: string,
	options: DeviceOptions,
	fn: (device: Device) => Promise<T>,
): Promise<T> {
	const device = await Device.open(ident, options);
	try {
		return await fn(device);
	} finally {
		await device.close();
	}
}

/** All currently openable device identifiers. */
export async function enumerateDevices(): Promise<string[]> {
	return runXioJson<string[]>(["enum"]);
}
