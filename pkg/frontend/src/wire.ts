/**
 * Binary wire-format codecs, bit-exact with the core library.
 *
 * IDENTIFY payload (little-endian):
 *   bytes 0-7   nsect          u64
 *   bytes 8-11  lbaNbytes      u32
 *   bytes 12-15 nzones         u32
 *   bytes 16-23 zoneNsect      u64
 *   byte  24    kind           u8 (0 conventional, 1 zoned)
 *   remainder zero
 *
 * Zone report payload: u64 total zone count, then 24 bytes per zone:
 *   zslba u64, wp u64, state u8 (0 EMPTY / 1 OPEN / 2 FULL), 7 pad.
 */

export const IDENTIFY_MIN_NBYTES = 25;
export const ZONE_RECORD_NBYTES = 24;

export type GeometryKind = "conventional" | "zoned";

export interface Geometry {
	lbaNbytes: number;
	nsect: number;
	nzones: number;
	zoneNsect: number;
	kind: GeometryKind;
}

export type ZoneStateName = "EMPTY" | "OPEN" | "FULL";

export interface ZoneRecord {
	zslba: number;
	wp: number;
	state: ZoneStateName;
}

const ZONE_STATES: ZoneStateName[] = ["EMPTY", "OPEN", "FULL"];

function asSafeNumber(value: bigint, what: string): number {
	if (value > BigInt(Number.MAX_SAFE_INTEGER)) {
		throw new RangeError(`${what} ${value} exceeds the safe integer range`);
	}
	return Number(value);
}

export function decodeIdentify(payload: Uint8Array): Geometry {
	if (payload.length < IDENTIFY_MIN_NBYTES) {
		throw new RangeError("identify payload too short");
	}
	const view = new DataView(payload.buffer, payload.byteOffset, payload.byteLength);
	const kind = view.getUint8(24);
	if (kind > 1) {
		throw new RangeError(`unknown geometry kind ${kind}`);
	}
	return {
		nsect: asSafeNumber(view.getBigUint64(0, true), "nsect"),
		lbaNbytes: view.getUint32(8, true),
		nzones: view.getUint32(12, true),
		zoneNsect: asSafeNumber(view.getBigUint64(16, true), "zoneNsect"),
		kind: kind === 1 ? "zoned" : "conventional",
	};
}

export function encodeIdentify(
	geo: Geometry,
	nbytes: number = IDENTIFY_MIN_NBYTES,
): Uint8Array {
	if (nbytes < IDENTIFY_MIN_NBYTES) {
		throw new RangeError(`identify payload needs >= ${IDENTIFY_MIN_NBYTES} bytes`);
	}
	const out = new Uint8Array(nbytes);
	const view = new DataView(out.buffer);
	view.setBigUint64(0, BigInt(geo.nsect), true);
	view.setUint32(8, geo.lbaNbytes, true);
	view.setUint32(12, geo.nzones, true);
	view.setBigUint64(16, BigInt(geo.zoneNsect), true);
	view.setUint8(24, geo.kind === "zoned" ? 1 : 0);
	return out;
}

export interface ZoneReport {
	/** Total zones on the device (may exceed the decoded records). */
	nzones: number;
	zones: ZoneRecord[];
}

export function decodeZoneReport(payload: Uint8Array): ZoneReport {
	if (payload.length < 8) {
		throw new RangeError("zone report payload too short");
	}
	const view = new DataView(payload.buffer, payload.byteOffset, payload.byteLength);
	const total = asSafeNumber(view.getBigUint64(0, true), "zone count");
	const fit = Math.floor((payload.length - 8) / ZONE_RECORD_NBYTES);
	const zones: ZoneRecord[] = [];
	for (let i = 0; i < Math.min(total, fit); i++) {
		const base = 8 + i * ZONE_RECORD_NBYTES;
		const state = view.getUint8(base + 16);
		if (state >= ZONE_STATES.length) {
			throw new RangeError(`unknown zone state ${state}`);
		}
		zones.push({
			zslba: asSafeNumber(view.getBigUint64(base, true), "zslba"),
			wp: asSafeNumber(view.getBigUint64(base + 8, true), "wp"),
			state: ZONE_STATES[state],
		});
	}
	return { nzones: total, zones };
}

export function encodeZoneReport(total: number, zones: ZoneRecord[]): Uint8Array {
	const out = new Uint8Array(8 + zones.length * ZONE_RECORD_NBYTES);
	const view = new DataView(out.buffer);
	view.setBigUint64(0, BigInt(total), true);
	zones.forEach((zone, i) => {
		const base = 8 + i * ZONE_RECORD_NBYTES;
		view.setBigUint64(base, BigInt(zone.zslba), true);
		view.setBigUint64(base + 8, BigInt(zone.wp), true);
		view.setUint8(base + 16, ZONE_STATES.indexOf(zone.state));
	});
	return out;
}
