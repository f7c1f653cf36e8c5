// Polygon overlay rendering: highlight the target object, dim everything
// else. Geometry helpers are pure so they can be unit-tested headlessly.

export type Point = [number, number]

export function polygonBBox(polygon: Point[]): [number, number, number, number] {
    const xs = polygon.map((p) => p[0])
    const ys = polygon.map((p) => p[1])
    return [Math.min(...xs), Math.min(...ys), Math.max(...xs), Math.max(...ys)]
}

export function clampBox(
    box: [number, number, number, number],
    width: number,
    height: number,
): [number, number, number, number] {
    return [
        Math.max(0, box[0]),
        Math.max(0, box[1]),
        Math.min(width, box[2]),
        Math.min(height, box[3]),
    ]
}

// Box grown by a margin on each side, for a crop that keeps some context
// around the object; clamped to the image.
export function focusBox(
    polygon: Point[],
    width: number,
    height: number,
    margin = 0.15,
): [number, number, number, number] {
    const [x0, y0, x1, y1] = polygonBBox(polygon)
    const dx = (x1 - x0) * margin
    const dy = (y1 - y0) * margin
    return clampBox([x0 - dx, y0 - dy, x1 + dx, y1 + dy], width, height)
}

export function pointInPolygon(point: Point, polygon: Point[]): boolean {
    const [px, py] = point
    let inside = false
    for (let i = 0, j = polygon.length - 1; i < polygon.length; j = i++) {
        const [xi, yi] = polygon[i]
        const [xj, yj] = polygon[j]
        const crosses = yi > py !== yj > py && px < ((xj - xi) * (py - yi)) / (yj - yi) + xi
        if (crosses) inside = !inside
    }
    return inside
}

function tracePolygon(ctx: CanvasRenderingContext2D, polygon: Point[]): void {
    ctx.moveTo(polygon[0][0], polygon[0][1])
    for (let i = 1; i < polygon.length; i++) {
        ctx.lineTo(polygon[i][0], polygon[i][1])
    }
    ctx.closePath()
}

// Draws the dimming veil with a polygon-shaped hole (even-odd fill) plus the
// polygon outline. The image itself is drawn by the caller beforehand.
export function drawObjectOverlay(
    ctx: CanvasRenderingContext2D,
    width: number,
    height: number,
    polygon: Point[],
): void {
    ctx.save()
    ctx.beginPath()
    ctx.rect(0, 0, width, height)
    tracePolygon(ctx, polygon)
    ctx.fillStyle = 'rgba(16, 16, 24, 0.62)'
    ctx.fill('evenodd')
    ctx.beginPath()
    tracePolygon(ctx, polygon)
    ctx.lineWidth = Math.max(2, Math.round(Math.min(width, height) / 160))
    ctx.strokeStyle = '#ffd34d'
    ctx.stroke()
    ctx.restore()
}
