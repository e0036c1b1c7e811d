# refgraph tests
