// Mirrors of the service payloads. The client never derives any of these
// fields itself: every displayed number comes from the server.
export {};
