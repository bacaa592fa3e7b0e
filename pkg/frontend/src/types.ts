import { z } from "zod";

export const DurationStatsSchema = z
  .object({
    mean: z.number(),
    median: z.number(),
    min: z.number(),
    max: z.number(),
  })
  .nullable();

export const ModelDocSchema = z.object({
  schema_version: z.literal(1),
  places: z.array(z.object({ id: z.string(), type: z.string() })),
  transitions: z.array(
    z.object({ id: z.string(), label: z.string().nullable() }),
  ),
  arcs: z.array(
    z.object({
      source: z.string(),
      target: z.string(),
      variable: z.boolean(),
    }),
  ),
  initial_marking: z.array(
    z.object({ place: z.string(), objects: z.array(z.string()) }),
  ),
  final_marking: z.array(
    z.object({ place: z.string(), objects: z.array(z.string()) }),
  ),
  annotations: z
    .object({
      places: z.record(
        z.string(),
        z.object({
          produced: z.number(),
          consumed: z.number(),
          missing: z.number(),
          remaining: z.number(),
          sojourn: DurationStatsSchema,
        }),
      ),
      transitions: z.record(
        z.string(),
        z.object({
          frequency: z.number(),
          per_type: z.record(
            z.string(),
            z.object({
              unique_objects: z.number(),
              mean_objects: z.number(),
              min_objects: z.number(),
              max_objects: z.number(),
            }),
          ),
        }),
      ),
      arcs: z.array(
        z.object({
          source: z.string(),
          target: z.string(),
          occurrences: z.number(),
          mean_multiplicity: z.number(),
          durations: DurationStatsSchema,
        }),
      ),
    })
    .optional(),
});

export type ModelDoc = z.infer<typeof ModelDocSchema>;

export const StatsSchema = z.object({
  events: z.number(),
  activities: z.array(z.string()),
  object_types: z.record(z.string(), z.number()),
});

export type LogStats = z.infer<typeof StatsSchema>;

export const UploadResponseSchema = z.object({
  log_id: z.string(),
  events: z.number(),
});

export const DiscoverResponseSchema = z.object({
  model_id: z.string(),
  cached: z.boolean(),
});

export const ServiceErrorSchema = z.object({
  error: z.string(),
  detail: z.string(),
});

/** Parameters for a discovery request; mirrors the service contract. */
export interface DiscoveryParams {
  noise: number;
  tau: number;
  types?: string[];
}
