/**
 * Minimal batch-style queue over a device handle.
 *
 * Callback-driven completion dispatch is not idiomatic here; instead a
 * queue stages up to `capacity` operations and drain() executes the
 * batch, resolving to one completion record per operation in
 * submission order. The two failure channels survive the translation:
 * device-reported statuses come back inside the completion records,
 * submission-path failures reject the drain.
 */

import { BusyError, ClosedError, DeviceStatusError } from "./errors.js";
import type { StatusClass } from "./errors.js";
import type { Device } from "./device.js";

let liveQueues = 0;

/** Live queue count, alongside openHandleCount() for leak tests. */
export function openQueueCount(): number {
	return liveQueues;
}

export type QueueOp =
	| { kind: "read"; slba: number; nblocks: number }
	| { kind: "write"; slba: number; data: Uint8Array }
	| { kind: "zoneAppend"; zslba: number; data: Uint8Array }
	| { kind: "zoneReset"; zslba: number };

export interface QueueCompletion {
	/** 16-bit device status; 0 means success. */
	status: number;
	statusClass: StatusClass | "success";
	/** Assigned LBA for zoneAppend. */
	result?: number;
	/** Block bytes for a successful read. */
	data?: Uint8Array;
}

export class Queue {
	readonly device: Device;
	readonly capacity: number;

	private staged: QueueOp[] = [];
	private closed = false;

	constructor(device: Device, capacity = 32) {
		if (!Number.isInteger(capacity) || capacity < 1) {
			throw new RangeError("capacity must be a positive integer");
		}
		this.device = device;
		this.capacity = capacity;
		liveQueues += 1;
	}

	private checkOpen(): void {
		if (this.closed) {
			throw new ClosedError("queue is closed");
		}
	}

	/** Number of staged, not yet drained operations. */
	get pending(): number {
		return this.staged.length;
	}

	/** Stage operations; fails BUSY when the batch would exceed capacity. */
	submitBatch(ops: QueueOp[]): void {
		this.checkOpen();
		if (this.staged.length + ops.length > this.capacity) {
			throw new BusyError(
				`batch of ${ops.length} exceeds free capacity ` +
				`${this.capacity - this.staged.length}`,
			);
		}
		this.staged.push(...ops);
	}

	/** Execute everything staged; one completion per op, in order. */
	async drain(): Promise<QueueCompletion[]> {
		this.checkOpen();
		const batch = this.staged;
		this.staged = [];
		const completions: QueueCompletion[] = [];
		for (const op of batch) {
			completions.push(await this.execute(op));
		}
		return completions;
	}

	private async execute(op: QueueOp): Promise<QueueCompletion> {
		try {
			switch (op.kind) {
				case "read": {
					const data = await this.device.read(op.slba, op.nblocks);
					return { status: 0, statusClass: "success", data };
				}
				case "write":
					await this.device.write(op.slba, op.data);
					return { status: 0, statusClass: "success" };
				case "zoneAppend": {
					const result = await this.device.zoneAppend(op.zslba, op.data);
					return { status: 0, statusClass: "success", result };
				}
				case "zoneReset":
					await this.device.zoneReset(op.zslba);
					return { status: 0, statusClass: "success" };
			}
		} catch (err) {
			if (err instanceof DeviceStatusError) {
				return { status: err.status, statusClass: err.statusClass };
			}
			throw err; // submission channel: reject the drain
		}
	}

	/** Release the queue; staged-but-undrained operations are dropped. */
	close(): void {
		if (!this.closed) {
			this.closed = true;
			this.staged = [];
			liveQueues -= 1;
		}
	}
}
